"""Exception hierarchy. Everything raised on purpose derives from BeamlatError."""


class BeamlatError(Exception):
    pass


class ScheduleError(BeamlatError, ValueError):
    """Invalid noise schedule parameters or out-of-range timestep."""


class DimensionError(BeamlatError, ValueError):
    """Vector dimensionality does not match the world or another operand."""


class NumericalUnderflowError(BeamlatError, ArithmeticError):
    """All mixture responsibilities vanished after stabilisation."""


class BackendError(BeamlatError, RuntimeError):
    """A denoiser backend failed mid-run; carries run provenance."""

    def __init__(self, message: str, *, token: str, seed: int, start_iteration: int):
        super().__init__(
            f"{message} (condition={token!r}, seed={seed}, start_iteration={start_iteration})"
        )
        self.token = token
        self.seed = seed
        self.start_iteration = start_iteration


class TrainingDivergedError(BeamlatError, RuntimeError):
    """Training loss became non-finite."""


class MissingLatentError(BeamlatError, ValueError):
    """A trajectory does not cover every requested latent index."""


class EmptyHistoryError(BeamlatError, ValueError):
    """A latent pool was requested before any trajectory was recorded."""


class EmptyCandidateError(BeamlatError, ValueError):
    """A decoding step produced no candidates."""


class InsufficientCorpusError(BeamlatError, ValueError):
    """Not enough donor sequences to draw the requested negatives."""


class BoundExceededError(BeamlatError, ValueError):
    """Exhaustive enumeration would exceed the configured leaf bound."""


class DegenerateRatingsError(BeamlatError, ValueError):
    """Fleiss' kappa is undefined: no chance-corrected disagreement is possible."""


class StalePairingError(BeamlatError, ValueError):
    """Verdict submitted for a pairing that is not open to this rater."""


class JournalError(BeamlatError, ValueError):
    """Tournament journal is corrupt."""

    def __init__(self, message: str, *, line: int, offset: int):
        super().__init__(f"{message} (line {line}, byte offset {offset})")
        self.line = line
        self.offset = offset


class ServiceError(BeamlatError, RuntimeError):
    """Annotation service could not start (e.g. port already in use)."""
