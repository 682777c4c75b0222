"""Forward corruption and deterministic reverse denoising.

Conventions (used everywhere downstream):

* A timestep ``k`` indexes ``alpha_bar`` (0 = clean, T = most noised).
* An *iteration* counts completed reverse steps from pure noise, so a latent
  at iteration ``i`` sits at timestep ``T - i``; iteration 0 is the start
  noise and iteration T is the finished sample.
* ``TrajectoryRecord.stored_latents[k]`` is the latent produced by the run's
  (k+1)-th reverse iteration; those positions are what latent-index sets such
  as {0, 1, 2, 3} refer to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .exceptions import BackendError, ScheduleError
from .schedule import NoiseSchedule
from .seeds import noise_vector
from .validation import as_vector
from .world import Condition


@dataclass(frozen=True)
class LatentState:
    vector: np.ndarray = field(repr=False)
    iteration: int
    noise_level: float

    def __post_init__(self):
        object.__setattr__(self, "vector", as_vector(self.vector, "latent vector"))
        if self.iteration < 0:
            raise ValueError(f"iteration must be >= 0, got {self.iteration}")

    @property
    def d(self) -> int:
        return self.vector.shape[0]


class Denoiser(Protocol):
    """Anything that can estimate x0 from a noised latent."""

    def predict_x0(
        self, vector: np.ndarray, alpha_bar: float, condition: Condition
    ) -> np.ndarray: ...


def initial_noise(seed: int, d: int, schedule: NoiseSchedule) -> LatentState:
    """Pure-noise start state (iteration 0) drawn from the given seed."""
    return LatentState(
        vector=noise_vector(seed, d),
        iteration=0,
        noise_level=schedule.level_for_iteration(0),
    )


def forward_noise(
    x0: np.ndarray, k: int, schedule: NoiseSchedule, rng: np.random.Generator
) -> LatentState:
    """Corrupt x0 to timestep k:  x_k = sqrt(ab_k) x0 + sqrt(1 - ab_k) eps."""
    x0 = as_vector(x0, "x0")
    ab = schedule.alpha_bar_at(k)
    eps = rng.standard_normal(x0.shape[0])
    vector = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
    return LatentState(vector=vector, iteration=schedule.T - k, noise_level=ab)


def reverse_step(xt: LatentState, x0_hat: np.ndarray, schedule: NoiseSchedule) -> LatentState:
    """One deterministic reverse update (eta = 0).

    eps_hat = (x_t - sqrt(ab) x0_hat) / sqrt(1 - ab)
    x_next  = sqrt(ab_next) x0_hat + sqrt(1 - ab_next) eps_hat
    """
    if xt.iteration >= schedule.T:
        raise ScheduleError("latent is already fully denoised")
    x0_hat = as_vector(x0_hat, "x0_hat", d=xt.d)
    k = schedule.T - xt.iteration
    ab = schedule.alpha_bar_at(k)
    ab_next = schedule.alpha_bar_at(k - 1)
    eps_hat = (xt.vector - np.sqrt(ab) * x0_hat) / np.sqrt(1.0 - ab)
    vector = np.sqrt(ab_next) * x0_hat + np.sqrt(1.0 - ab_next) * eps_hat
    return LatentState(vector=vector, iteration=xt.iteration + 1, noise_level=ab_next)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Everything needed to reproduce and resume one denoising run."""

    condition: Condition
    seed: int
    start_iteration: int
    stored_latents: tuple[LatentState, ...]
    final_sample: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "final_sample", as_vector(self.final_sample, "final_sample"))
        iters = [s.iteration for s in self.stored_latents]
        if any(b <= a for a, b in zip(iters, iters[1:])):
            raise ValueError("stored latent iterations must be strictly increasing")


def run_denoise(
    condition: Condition,
    init: LatentState,
    schedule: NoiseSchedule,
    denoiser: Denoiser,
    n_store: int,
    *,
    seed: int,
) -> TrajectoryRecord:
    """Denoise from ``init`` to iteration T, storing the first ``n_store``
    latents this run produces.

    ``seed`` is provenance only (the seed that created ``init``, or the donor
    run's seed when resuming); the reverse pass itself is deterministic.
    """
    if n_store < 0:
        raise ValueError(f"n_store must be >= 0, got {n_store}")
    state = init
    stored: list[LatentState] = []
    while state.iteration < schedule.T:
        try:
            x0_hat = denoiser.predict_x0(state.vector, state.noise_level, condition)
        except Exception as exc:  # attach run provenance before propagating
            raise BackendError(
                f"denoiser backend failed at iteration {state.iteration}: {exc}",
                token=condition.token,
                seed=seed,
                start_iteration=init.iteration,
            ) from exc
        state = reverse_step(state, x0_hat, schedule)
        if len(stored) < n_store:
            stored.append(state)
    return TrajectoryRecord(
        condition=condition,
        seed=seed,
        start_iteration=init.iteration,
        stored_latents=tuple(stored),
        final_sample=state.vector,
    )


def fresh_run(
    condition: Condition,
    seed: int,
    d: int,
    schedule: NoiseSchedule,
    denoiser: Denoiser,
    n_store: int,
) -> TrajectoryRecord:
    """Denoise from seeded pure noise."""
    return run_denoise(
        condition, initial_noise(seed, d, schedule), schedule, denoiser, n_store, seed=seed
    )
