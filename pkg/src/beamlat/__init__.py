"""Beam search decoding for sequential latent diffusion on synthetic worlds."""

from .baselines import greedy_decode, nucleus_decode, nucleus_filter
from .denoisers import (
    ExactMixtureDenoiser,
    ToyDenoiser,
    mixture_posterior_mean,
    sample_exact_batch,
    train_toy_denoiser,
)
from .diffusion import (
    LatentState,
    TrajectoryRecord,
    forward_noise,
    fresh_run,
    initial_noise,
    reverse_step,
    run_denoise,
)
from .engine import (
    Beam,
    BeamConfig,
    DecodeResult,
    OracleResult,
    decode_sequence,
    exhaustive_oracle,
    predicted_leaf_count,
)
from .exceptions import (
    BackendError,
    BeamlatError,
    BoundExceededError,
    DegenerateRatingsError,
    DimensionError,
    EmptyCandidateError,
    EmptyHistoryError,
    InsufficientCorpusError,
    JournalError,
    MissingLatentError,
    NumericalUnderflowError,
    ScheduleError,
    ServiceError,
    StalePairingError,
    TrainingDivergedError,
)
from .harness import make_tournament_config, run_experiment, run_history_ablation
from .latent_store import (
    BeamLatentCache,
    LatentRef,
    PoolEntry,
    pool_size,
    provenance_csv,
    provenance_stats,
)
from .metrics import (
    MetricsReport,
    complexity_audit,
    expected_call_counts,
    fleiss_kappa,
    sequence_metrics,
    win_percentages,
)
from .render import render_sequence, render_tile
from .schedule import NoiseSchedule, build_schedule
from .scoring import (
    ContrastiveScorer,
    ScoreModel,
    featurize,
    log_softmax,
    make_negatives,
    score_phi,
    train_classifier,
)
from .seeds import derive_seed, noise_vector, rng_from
from .server import TournamentServer
from .specs import SequenceSpec, SequenceStep, contextualize_prompts, resolve_conditions
from .tournament import Contender, Pairing, Tournament, run_scripted
from .world import Condition, MixtureComponent, MixtureModel, World

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "Beam",
    "BeamConfig",
    "BeamLatentCache",
    "BeamlatError",
    "BoundExceededError",
    "Condition",
    "Contender",
    "ContrastiveScorer",
    "DecodeResult",
    "DegenerateRatingsError",
    "DimensionError",
    "EmptyCandidateError",
    "EmptyHistoryError",
    "ExactMixtureDenoiser",
    "InsufficientCorpusError",
    "JournalError",
    "LatentRef",
    "LatentState",
    "MetricsReport",
    "MissingLatentError",
    "MixtureComponent",
    "MixtureModel",
    "NoiseSchedule",
    "NumericalUnderflowError",
    "OracleResult",
    "Pairing",
    "PoolEntry",
    "ScheduleError",
    "ScoreModel",
    "SequenceSpec",
    "SequenceStep",
    "ServiceError",
    "StalePairingError",
    "ToyDenoiser",
    "Tournament",
    "TournamentServer",
    "TrainingDivergedError",
    "TrajectoryRecord",
    "World",
    "build_schedule",
    "complexity_audit",
    "contextualize_prompts",
    "decode_sequence",
    "derive_seed",
    "exhaustive_oracle",
    "expected_call_counts",
    "featurize",
    "fleiss_kappa",
    "forward_noise",
    "fresh_run",
    "greedy_decode",
    "initial_noise",
    "log_softmax",
    "make_negatives",
    "make_tournament_config",
    "mixture_posterior_mean",
    "noise_vector",
    "nucleus_decode",
    "nucleus_filter",
    "pool_size",
    "predicted_leaf_count",
    "provenance_csv",
    "provenance_stats",
    "render_sequence",
    "render_tile",
    "resolve_conditions",
    "reverse_step",
    "rng_from",
    "run_denoise",
    "run_experiment",
    "run_history_ablation",
    "run_scripted",
    "sample_exact_batch",
    "score_phi",
    "sequence_metrics",
    "train_classifier",
    "train_toy_denoiser",
    "win_percentages",
]
