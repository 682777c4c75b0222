"""Sequence evaluation metrics, rater agreement, and call-count audits.

Image embeddings are unit-normalised samples; a fixed orthogonal projection
provides a second embedding view.  Consistency metrics average cosine
similarities over consecutive frames and are zeroed above a near-duplicate
threshold; prompt-alignment metrics compare each frame to the running mean of
the step prompts so far and zero out steps below a relevance floor before
averaging.  The clipped consistency and alignment scores multiply into a
single combined quality number per sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateRatingsError
from .latent_store import pool_size
from .scoring import cosine
from .validation import as_vector
from .world import Condition

CLIP_I_THRESHOLD = 0.9
DINO_I_THRESHOLD = 0.85
TEXT_FLOOR = 0.1
DINO_PROJECTION_SEED = 97

WIN_METRICS = ("clip_i", "dino_i", "clip_t", "clip_star", "dino_star")


def unit(x: np.ndarray) -> np.ndarray:
    x = as_vector(x, "embedding")
    norm = np.linalg.norm(x)
    if norm == 0.0:
        return x
    return x / norm


def embed_image(sample: np.ndarray) -> np.ndarray:
    return unit(sample)


def dino_projection(d: int, seed: int = DINO_PROJECTION_SEED) -> np.ndarray:
    """Fixed random orthogonal d x d matrix (QR of a seeded gaussian)."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    # sign-fix so the factorisation is unique
    return q * np.sign(np.diag(r))


def embed_projected(sample: np.ndarray, projection: np.ndarray) -> np.ndarray:
    return unit(projection @ as_vector(sample, "sample"))


def embed_text(condition: Condition) -> np.ndarray:
    return unit(condition.embedding)


def consecutive_consistency(
    embeddings: list[np.ndarray], threshold: float
) -> tuple[float, float]:
    """Mean cosine over consecutive pairs.  A mean above the threshold counts
    as near-duplicate collapse and the clipped value drops to zero."""
    if len(embeddings) < 2:
        raise ValueError("consistency needs at least two frames")
    sims = [cosine(a, b) for a, b in zip(embeddings, embeddings[1:])]
    raw = float(np.mean(sims))
    clipped = 0.0 if raw > threshold else raw
    return raw, clipped


def prompt_alignment(
    embeddings: list[np.ndarray],
    conditions: list[Condition],
    floor: float = TEXT_FLOOR,
) -> tuple[float, float]:
    """Per-frame cosine against the unit mean of the prompt embeddings seen up
    to that step.  Frames below the floor are zeroed before averaging."""
    if len(embeddings) != len(conditions):
        raise ValueError("one condition per frame required")
    texts = [embed_text(c) for c in conditions]
    sims = []
    for j, emb in enumerate(embeddings):
        target = unit(np.mean(texts[: j + 1], axis=0))
        sims.append(cosine(emb, target))
    raw = float(np.mean(sims))
    clipped = float(np.mean([0.0 if s < floor else s for s in sims]))
    return raw, clipped


@dataclass(frozen=True)
class MetricsReport:
    clip_i_raw: float
    clip_i: float
    dino_i_raw: float
    dino_i: float
    clip_t_raw: float
    clip_t: float
    clip_star: float
    dino_star: float
    goal_faithfulness: float
    step_faithfulness: float
    cross_consistency: float

    def value(self, metric: str) -> float:
        return getattr(self, metric)

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def rows(self, method: str, sequence_id: str) -> list[tuple]:
        pairs = [
            ("clip_i", self.clip_i_raw, self.clip_i),
            ("dino_i", self.dino_i_raw, self.dino_i),
            ("clip_t", self.clip_t_raw, self.clip_t),
            ("clip_star", self.clip_star, self.clip_star),
            ("dino_star", self.dino_star, self.dino_star),
            ("goal_faithfulness", self.goal_faithfulness, self.goal_faithfulness),
            ("step_faithfulness", self.step_faithfulness, self.step_faithfulness),
            ("cross_consistency", self.cross_consistency, self.cross_consistency),
        ]
        return [(method, sequence_id, name, raw, clipped) for name, raw, clipped in pairs]


def sequence_metrics(
    samples: list[np.ndarray],
    conditions: list[Condition],
    goal: Condition,
    *,
    clip_threshold: float = CLIP_I_THRESHOLD,
    dino_threshold: float = DINO_I_THRESHOLD,
    text_floor: float = TEXT_FLOOR,
    dino_seed: int = DINO_PROJECTION_SEED,
) -> MetricsReport:
    if len(samples) < 2:
        raise ValueError("sequence metrics need at least two steps")
    images = [embed_image(s) for s in samples]
    projection = dino_projection(len(samples[0]), dino_seed)
    projected = [embed_projected(s, projection) for s in samples]

    clip_i_raw, clip_i = consecutive_consistency(images, clip_threshold)
    dino_i_raw, dino_i = consecutive_consistency(projected, dino_threshold)
    clip_t_raw, clip_t = prompt_alignment(images, conditions, text_floor)

    goal_faith = cosine(images[-1], embed_text(goal))
    step_faith = float(np.mean([cosine(img, embed_text(c)) for img, c in zip(images, conditions)]))
    pair_sims = [
        cosine(images[a], images[b])
        for a in range(len(images))
        for b in range(a + 1, len(images))
    ]
    cross = float(np.mean(pair_sims))

    return MetricsReport(
        clip_i_raw=clip_i_raw,
        clip_i=clip_i,
        dino_i_raw=dino_i_raw,
        dino_i=dino_i,
        clip_t_raw=clip_t_raw,
        clip_t=clip_t,
        clip_star=clip_i * clip_t,
        dino_star=dino_i * clip_t,
        goal_faithfulness=goal_faith,
        step_faithfulness=step_faith,
        cross_consistency=cross,
    )


def win_percentages(
    reports: dict[str, dict[str, MetricsReport]],
    metrics: tuple[str, ...] = WIN_METRICS,
) -> dict[str, dict[str, float]]:
    """Per-method win rates.  For each sequence and metric, every method whose
    clipped value matches the best across methods gets credit (ties credit
    all).  Input maps method -> sequence id -> report; every method must cover
    the same sequences."""
    methods = sorted(reports)
    if not methods:
        return {}
    sequence_ids = sorted(reports[methods[0]])
    for method in methods:
        if sorted(reports[method]) != sequence_ids:
            raise ValueError("every method must report the same sequences")
    if not sequence_ids:
        raise ValueError("no sequences to compare")

    table: dict[str, dict[str, float]] = {m: {} for m in methods}
    for metric in metrics:
        wins = {m: 0 for m in methods}
        for sid in sequence_ids:
            values = {m: reports[m][sid].value(metric) for m in methods}
            best = max(values.values())
            for m, v in values.items():
                if v >= best - 1e-12:
                    wins[m] += 1
        for m in methods:
            table[m][metric] = 100.0 * wins[m] / len(sequence_ids)
    for m in methods:
        table[m]["overall"] = float(np.mean([table[m][metric] for metric in metrics]))
    return table


def fleiss_kappa(counts) -> float:
    """Chance-corrected agreement for ratings-per-category counts, one row per
    rated item.  Every item needs the same number of ratings (>= 2).  Perfect
    observed agreement with a degenerate single category is defined as 1.0."""
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 2 or counts.shape[0] < 1 or counts.shape[1] < 2:
        raise DegenerateRatingsError("need a ratings matrix of shape (items, categories >= 2)")
    n_per_item = counts.sum(axis=1)
    n = n_per_item[0]
    if not np.all(n_per_item == n):
        raise DegenerateRatingsError("every item needs the same number of ratings")
    if n < 2:
        raise DegenerateRatingsError("agreement needs at least two ratings per item")

    p_observed = float(np.mean(((counts**2).sum(axis=1) - n) / (n * (n - 1))))
    category_share = counts.sum(axis=0) / counts.sum()
    p_expected = float((category_share**2).sum())
    if p_expected == 1.0:
        if p_observed == 1.0:
            return 1.0
        raise DegenerateRatingsError("all ratings in one category but observed agreement < 1")
    return (p_observed - p_expected) / (1.0 - p_expected)


def expected_call_counts(config, length: int) -> list[int]:
    """Denoiser runs per step implied by a configuration: r at step 1, then
    surviving-parents times pool size, where pruning caps parents at width
    once the previous step reached prune_start."""
    counts = [config.r]
    candidates = config.r
    for j in range(2, length + 1):
        parents = candidates if (j - 1) < config.prune_start else min(config.width, candidates)
        step = parents * pool_size(j, config.m, len(config.latent_indices), config.n_random_mid)
        counts.append(step)
        candidates = step
    return counts


def complexity_audit(run_log: dict) -> dict:
    """Check a run log's actual per-step denoiser calls and candidate counts
    against the counts its own configuration predicts."""
    from .engine import BeamConfig

    config = BeamConfig.from_json(run_log["config"])
    length = len(run_log["per_step"])
    if run_log.get("method") in ("greedy", "nucleus"):
        # single-path methods expand exactly one parent per step
        expected = [config.r] + [
            pool_size(j, config.m, len(config.latent_indices), config.n_random_mid)
            for j in range(2, length + 1)
        ]
    else:
        expected = expected_call_counts(config, length)
    actual = list(run_log["denoiser_calls"])
    candidates = [len(step) for step in run_log["per_step"]]
    return {
        "expected_calls": expected,
        "actual_calls": actual,
        "candidates_per_step": candidates,
        "total_calls": sum(actual),
        "matches": expected == actual and expected == candidates,
    }


def metrics_csv_rows(
    reports: dict[str, dict[str, MetricsReport]]
) -> list[tuple[str, str, str, float, float]]:
    rows = []
    for method in sorted(reports):
        for sid in sorted(reports[method]):
            rows.extend(reports[method][sid].rows(method, sid))
    return rows
