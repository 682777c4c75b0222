"""Beam search over latent denoising trajectories.

Decoding builds a sequence step by step.  Step 1 denoises ``r`` seeded noise
draws.  At step j >= 2 every surviving beam gathers a candidate pool (its
stored early latents from the last min(m, j-1) steps, plus fresh seeds), runs
one denoise per pool entry under the step's condition, and scores candidates
with a log-softmax over the scorer's phi values, normalised within the parent
beam's candidate set.  Sequence scores accumulate additively and the top
``width`` beams survive once ``j >= prune_start``; earlier steps keep
everything.  Ties break towards the lexicographically smallest beam id, so
decoding is fully deterministic.

Beam ids are dot-joined candidate ordinals ("2.0.4"): the initial seed index,
then the pool position chosen at each step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .denoisers import ExactMixtureDenoiser
from .diffusion import Denoiser, TrajectoryRecord, fresh_run, run_denoise
from .exceptions import BoundExceededError, EmptyCandidateError
from .latent_store import BeamLatentCache, LatentRef, PoolEntry, pool_size
from .schedule import NoiseSchedule
from .scoring import Context, ScoreModel, log_softmax, log_softmax_step, score_phi
from .seeds import derive_seed
from .specs import SequenceSpec, contextualize_prompts, resolve_conditions
from .world import Condition, World

DEFAULT_LEAF_BOUND = 10_000


@dataclass(frozen=True)
class BeamConfig:
    width: int = 4
    m: int = 2
    latent_indices: tuple[int, ...] = (0, 1, 2, 3)
    r: int = 4
    prune_start: int = 3
    n_random_mid: int = 1
    master_seed: int = 0
    blend: float = 0.0
    global_softmax: bool = False
    n_store: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "latent_indices", tuple(sorted(set(self.latent_indices))))
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not self.latent_indices:
            raise ValueError("latent_indices must be nonempty")
        if any(k < 0 for k in self.latent_indices):
            raise ValueError("latent indices must be >= 0")
        if self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if self.prune_start < 2:
            raise ValueError(f"prune_start must be >= 2, got {self.prune_start}")
        if self.n_random_mid < 0:
            raise ValueError(f"n_random_mid must be >= 0, got {self.n_random_mid}")
        if self.n_store is not None and self.n_store <= max(self.latent_indices):
            raise ValueError("n_store must cover every latent index")

    @property
    def store_count(self) -> int:
        return self.n_store if self.n_store is not None else max(self.latent_indices) + 1

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "m": self.m,
            "latent_indices": list(self.latent_indices),
            "r": self.r,
            "prune_start": self.prune_start,
            "n_random_mid": self.n_random_mid,
            "master_seed": self.master_seed,
            "blend": self.blend,
            "global_softmax": self.global_softmax,
            "n_store": self.n_store,
        }

    @classmethod
    def from_json(cls, data: dict) -> "BeamConfig":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: v for k, v in data.items() if k in known}
        if "latent_indices" in kwargs:
            kwargs["latent_indices"] = tuple(kwargs["latent_indices"])
        return cls(**kwargs)


@dataclass(frozen=True)
class BeamStep:
    sample: np.ndarray = field(repr=False)
    ref: LatentRef
    record: TrajectoryRecord = field(repr=False)
    phi: float = 0.0
    log_softmax: float = 0.0


@dataclass(frozen=True)
class Beam:
    id_path: tuple[int, ...]
    steps: tuple[BeamStep, ...]
    cumulative: float
    cache: BeamLatentCache = field(repr=False)

    @property
    def id_str(self) -> str:
        return ".".join(str(i) for i in self.id_path)

    @property
    def samples(self) -> list[np.ndarray]:
        return [step.sample for step in self.steps]

    def context(self, conditions: tuple[Condition, ...]) -> Context:
        return [(step.sample, conditions[i]) for i, step in enumerate(self.steps)]


def init_beams(
    conditions: tuple[Condition, ...],
    config: BeamConfig,
    schedule: NoiseSchedule,
    denoiser: Denoiser,
    model: ScoreModel,
    d: int,
) -> tuple[list[Beam], int]:
    """Step 1: r fresh-seeded runs, scored against an empty context.  Never
    pruned.  Returns the beams and the denoiser-call count (= r)."""
    condition = conditions[0]
    candidates = []
    for k in range(config.r):
        seed = derive_seed(config.master_seed, 1, k)
        record = fresh_run(condition, seed, d, schedule, denoiser, config.store_count)
        candidates.append((k, seed, record))
    phis = [score_phi(rec.final_sample, condition, [], model) for _, _, rec in candidates]
    table = log_softmax_step(phis, step_index=1)
    beams = []
    for (k, seed, record), phi, ls in zip(candidates, table.phis, table.log_softmax):
        cache = BeamLatentCache()
        beam_id = str(k)
        cache.record_trajectory(beam_id, 1, record, config.latent_indices)
        ref = LatentRef(step_index=1, beam_id=beam_id, latent_index="RANDOM_SEED", donor_seed=seed)
        beams.append(
            Beam(
                id_path=(k,),
                steps=(
                    BeamStep(
                        sample=record.final_sample,
                        ref=ref,
                        record=record,
                        phi=float(phi),
                        log_softmax=float(ls),
                    ),
                ),
                cumulative=float(ls),
                cache=cache,
            )
        )
    return beams, config.r


def _candidate_runs(
    parent: Beam,
    j: int,
    condition: Condition,
    config: BeamConfig,
    schedule: NoiseSchedule,
    denoiser: Denoiser,
    d: int,
) -> list[tuple[PoolEntry, TrajectoryRecord]]:
    """One denoise run per pool entry, in pool order.  Shared by the decoder
    and the exhaustive reference search so candidate sets match exactly."""
    pool = parent.cache.gather_latent_pool(
        parent.id_str,
        j,
        config.m,
        config.latent_indices,
        config.n_random_mid,
        config.master_seed,
        d,
        schedule,
    )
    if not pool:
        raise EmptyCandidateError(f"empty candidate pool at step {j}")
    return [
        (
            entry,
            run_denoise(
                condition,
                entry.state,
                schedule,
                denoiser,
                config.store_count,
                seed=entry.ref.donor_seed,
            ),
        )
        for entry in pool
    ]


def _extend(
    parent: Beam,
    j: int,
    ordinal: int,
    entry: PoolEntry,
    record: TrajectoryRecord,
    phi: float,
    ls: float,
    config: BeamConfig,
) -> Beam:
    cache = parent.cache.child()
    child_id = parent.id_path + (ordinal,)
    child_id_str = ".".join(str(i) for i in child_id)
    cache.record_trajectory(child_id_str, j, record, config.latent_indices)
    cache.retain_from(j + 1 - config.m)
    return Beam(
        id_path=child_id,
        steps=parent.steps
        + (
            BeamStep(
                sample=record.final_sample, ref=entry.ref, record=record, phi=phi, log_softmax=ls
            ),
        ),
        cumulative=parent.cumulative + ls,
        cache=cache,
    )


def expand_step(
    beams: Iterable[Beam],
    j: int,
    conditions: tuple[Condition, ...],
    config: BeamConfig,
    schedule: NoiseSchedule,
    denoiser: Denoiser,
    model: ScoreModel,
    d: int,
) -> tuple[list[Beam], int]:
    """Expand every beam with its step-j candidate pool.  Candidate scores are
    log-softmax normalised within the parent's pool (or globally across all
    candidates when config.global_softmax is set), then added to the parent's
    cumulative score."""
    condition = conditions[j - 1]
    calls = 0
    per_parent: list[tuple[Beam, list[tuple[PoolEntry, TrajectoryRecord]], list[float]]] = []
    for parent in beams:
        runs = _candidate_runs(parent, j, condition, config, schedule, denoiser, d)
        calls += len(runs)
        context = parent.context(conditions)
        phis = [score_phi(rec.final_sample, condition, context, model) for _, rec in runs]
        per_parent.append((parent, runs, phis))

    children: list[Beam] = []
    if config.global_softmax:
        all_phis = np.array([phi for _, _, phis in per_parent for phi in phis])
        table = log_softmax(all_phis)
        pos = 0
        for parent, runs, phis in per_parent:
            for ordinal, ((entry, record), phi) in enumerate(zip(runs, phis)):
                children.append(
                    _extend(parent, j, ordinal, entry, record, phi, float(table[pos]), config)
                )
                pos += 1
    else:
        for parent, runs, phis in per_parent:
            table = log_softmax_step(phis, step_index=j)
            for ordinal, ((entry, record), phi, ls) in enumerate(
                zip(runs, phis, table.log_softmax)
            ):
                children.append(
                    _extend(parent, j, ordinal, entry, record, phi, float(ls), config)
                )
    return children, calls


def prune(candidates: list[Beam], j: int, config: BeamConfig) -> list[Beam]:
    """Keep everything before prune_start, else the top-width beams by
    cumulative score; ties towards the smallest beam id.  Stable order."""
    ranked = sorted(candidates, key=lambda b: (-b.cumulative, b.id_path))
    if j < config.prune_start:
        return ranked
    return ranked[: config.width]


@dataclass
class DecodeResult:
    winner: Beam
    run_log: dict
    denoiser_calls: list[int]

    @property
    def samples(self) -> list[np.ndarray]:
        return self.winner.samples

    @property
    def refs(self) -> list[LatentRef]:
        return [step.ref for step in self.winner.steps]

    @property
    def score(self) -> float:
        return self.winner.cumulative


def _candidate_log_entry(beam: Beam, j: int) -> dict:
    step = beam.steps[j - 1]
    return {
        "step": j,
        "beam_id": beam.id_str,
        "parent_id": ".".join(str(i) for i in beam.id_path[:-1]),
        "latent_ref": step.ref.to_json(),
        "phi": step.phi,
        "log_softmax": step.log_softmax,
        "cumulative": beam.cumulative,
        "kept": False,
    }


def _assemble_run_log(
    method: str,
    spec: SequenceSpec,
    config: BeamConfig,
    per_step: list[list[dict]],
    calls: list[int],
    winner: Beam,
    extra: dict | None = None,
) -> dict:
    log = {
        "method": method,
        "config": config.to_json(),
        "spec": spec.to_json(),
        "per_step": per_step,
        "denoiser_calls": calls,
        "chosen_path": {
            "beam_id": winner.id_str,
            "score": winner.cumulative,
            "steps": [
                {
                    "step": i + 1,
                    "latent_ref": step.ref.to_json(),
                    "phi": step.phi,
                    "log_softmax": step.log_softmax,
                    "sample": step.sample.tolist(),
                }
                for i, step in enumerate(winner.steps)
            ],
        },
    }
    if extra:
        log.update(extra)
    return log


def decode_sequence(
    spec: SequenceSpec,
    world: World,
    config: BeamConfig,
    denoiser: Denoiser | None = None,
    model: ScoreModel | None = None,
) -> DecodeResult:
    """Full beam decode.  Returns the winning beam plus a run log holding
    every candidate's scores, the chosen latent provenance, and per-step
    denoiser-call counts."""
    denoiser = denoiser if denoiser is not None else ExactMixtureDenoiser(world)
    model = model if model is not None else ScoreModel.default()
    schedule = world.schedule()
    conditions = contextualize_prompts(resolve_conditions(spec, world), config.blend)

    beams, calls_1 = init_beams(conditions, config, schedule, denoiser, model, world.d)
    calls = [calls_1]
    per_step: list[list[dict]] = [[_candidate_log_entry(b, 1) for b in beams]]
    for entry in per_step[0]:
        entry["kept"] = True

    for j in range(2, len(spec) + 1):
        candidates, step_calls = expand_step(
            beams, j, conditions, config, schedule, denoiser, model, world.d
        )
        calls.append(step_calls)
        entries = {c.id_str: _candidate_log_entry(c, j) for c in candidates}
        beams = prune(candidates, j, config)
        for beam in beams:
            entries[beam.id_str]["kept"] = True
        per_step.append(list(entries.values()))

    winner = sorted(beams, key=lambda b: (-b.cumulative, b.id_path))[0]
    run_log = _assemble_run_log("beam", spec, config, per_step, calls, winner)
    return DecodeResult(winner=winner, run_log=run_log, denoiser_calls=calls)


@dataclass(frozen=True)
class OracleResult:
    id_path: tuple[int, ...]
    refs: tuple[LatentRef, ...]
    score: float
    leaves: int


def predicted_leaf_count(config: BeamConfig, length: int) -> int:
    leaves = config.r
    for j in range(2, length + 1):
        leaves *= pool_size(j, config.m, len(config.latent_indices), config.n_random_mid)
    return leaves


def exhaustive_oracle(
    spec: SequenceSpec,
    world: World,
    config: BeamConfig,
    denoiser: Denoiser | None = None,
    model: ScoreModel | None = None,
    leaf_bound: int = DEFAULT_LEAF_BOUND,
) -> OracleResult:
    """Enumerate the complete candidate tree (no pruning) and return the
    highest-scoring full sequence.  Uses the decoder's candidate generation
    so the trees coincide, but normalises and searches independently."""
    expected = predicted_leaf_count(config, len(spec))
    if expected > leaf_bound:
        raise BoundExceededError(f"{expected} leaves exceed the bound {leaf_bound}")

    denoiser = denoiser if denoiser is not None else ExactMixtureDenoiser(world)
    model = model if model is not None else ScoreModel.default()
    schedule = world.schedule()
    conditions = contextualize_prompts(resolve_conditions(spec, world), config.blend)
    length = len(spec)

    best: dict = {"beam": None}
    leaves = 0

    def consider(beam: Beam) -> None:
        nonlocal leaves
        leaves += 1
        cur = best["beam"]
        if cur is None or (-beam.cumulative, beam.id_path) < (-cur.cumulative, cur.id_path):
            best["beam"] = beam

    def grow(beam: Beam, j: int) -> None:
        if j > length:
            consider(beam)
            return
        condition = conditions[j - 1]
        runs = _candidate_runs(beam, j, condition, config, schedule, denoiser, world.d)
        context = beam.context(conditions)
        phis = np.array(
            [score_phi(rec.final_sample, condition, context, model) for _, rec in runs]
        )
        shifted = phis - phis.max()
        log_norm = np.log(np.exp(shifted).sum())
        for ordinal, (entry, record) in enumerate(runs):
            ls = float(shifted[ordinal] - log_norm)
            grow(_extend(beam, j, ordinal, entry, record, float(phis[ordinal]), ls, config), j + 1)

    roots, _ = init_beams(conditions, config, schedule, denoiser, model, world.d)
    for root in roots:
        grow(root, 2)

    winner: Beam = best["beam"]
    return OracleResult(
        id_path=winner.id_path,
        refs=tuple(step.ref for step in winner.steps),
        score=winner.cumulative,
        leaves=leaves,
    )
