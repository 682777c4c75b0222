"""Single-path decoding baselines: greedy and nucleus sampling.

Both walk the same candidate tree as the beam decoder (identical seed
derivation, pool ordering, and early-latent reuse with m = 1) but keep a
single beam alive.  Greedy picks the candidate whose sample is most aligned
with the step prompt; nucleus sampling draws from the smallest candidate set
whose softmax mass reaches p, renormalised.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .denoisers import ExactMixtureDenoiser
from .diffusion import Denoiser
from .engine import (
    Beam,
    BeamConfig,
    DecodeResult,
    _assemble_run_log,
    _candidate_log_entry,
    _candidate_runs,
    _extend,
    init_beams,
)
from .scoring import ScoreModel, log_softmax_step, score_phi
from .seeds import rng_from
from .specs import SequenceSpec, contextualize_prompts, resolve_conditions
from .world import World


def nucleus_filter(probs: np.ndarray, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Smallest prefix of the descending-probability order whose mass reaches
    p, renormalised.  Ties keep the earlier index first.  Returns (candidate
    indices, their renormalised probabilities)."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    probs = np.asarray(probs, dtype=float)
    order = np.argsort(-probs, kind="stable")
    cumulative = np.cumsum(probs[order])
    cutoff = int(np.searchsorted(cumulative, p - 1e-12))
    cutoff = min(cutoff, len(probs) - 1)
    kept = order[: cutoff + 1]
    mass = probs[kept]
    return kept, mass / mass.sum()


def _single_path_decode(
    method: str,
    spec: SequenceSpec,
    world: World,
    config: BeamConfig,
    denoiser: Denoiser | None,
    choose,
    extra: dict | None = None,
) -> DecodeResult:
    """Shared greedy/nucleus loop.  choose(j, phis) -> chosen ordinal."""
    denoiser = denoiser if denoiser is not None else ExactMixtureDenoiser(world)
    model = ScoreModel.prompt_only()
    cfg = replace(config, m=1, width=1, prune_start=2)
    schedule = world.schedule()
    conditions = contextualize_prompts(resolve_conditions(spec, world), cfg.blend)

    roots, calls_1 = init_beams(conditions, cfg, schedule, denoiser, model, world.d)
    calls = [calls_1]
    pick = choose(1, [b.steps[0].phi for b in roots])
    beam = roots[pick]
    per_step = [[_candidate_log_entry(b, 1) for b in roots]]
    per_step[0][pick]["kept"] = True

    for j in range(2, len(spec) + 1):
        condition = conditions[j - 1]
        runs = _candidate_runs(beam, j, condition, cfg, schedule, denoiser, world.d)
        calls.append(len(runs))
        context = beam.context(conditions)
        phis = [score_phi(rec.final_sample, condition, context, model) for _, rec in runs]
        table = log_softmax_step(phis, step_index=j)
        children = [
            _extend(beam, j, ordinal, entry, record, float(phi), float(ls), cfg)
            for ordinal, ((entry, record), phi, ls) in enumerate(
                zip(runs, phis, table.log_softmax)
            )
        ]
        pick = choose(j, phis)
        entries = [_candidate_log_entry(c, j) for c in children]
        entries[pick]["kept"] = True
        per_step.append(entries)
        beam = children[pick]

    run_log = _assemble_run_log(method, spec, cfg, per_step, calls, beam, extra)
    return DecodeResult(winner=beam, run_log=run_log, denoiser_calls=calls)


def greedy_decode(
    spec: SequenceSpec,
    world: World,
    config: BeamConfig,
    denoiser: Denoiser | None = None,
) -> DecodeResult:
    """Pick the most prompt-aligned candidate at every step; ties towards the
    lowest candidate ordinal."""

    def choose(j: int, phis: list[float]) -> int:
        return int(np.argmax(phis))

    return _single_path_decode("greedy", spec, world, config, denoiser, choose)


def nucleus_decode(
    spec: SequenceSpec,
    world: World,
    config: BeamConfig,
    p: float = 0.9,
    denoiser: Denoiser | None = None,
) -> DecodeResult:
    """Sample each step from the nucleus (top-p) of the softmax over candidate
    prompt alignments.  Draws are seeded per step from the master seed, so a
    given (config, p) replays exactly."""

    def choose(j: int, phis: list[float]) -> int:
        arr = np.asarray(phis, dtype=float)
        shifted = arr - arr.max()
        probs = np.exp(shifted)
        probs /= probs.sum()
        kept, renorm = nucleus_filter(probs, p)
        rng = rng_from(config.master_seed, j, "nucleus")
        return int(rng.choice(kept, p=renorm))

    return _single_path_decode(
        "nucleus", spec, world, config, denoiser, choose, extra={"p": p}
    )
