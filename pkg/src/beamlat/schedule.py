"""Linear-beta noise schedule.

``alpha_bar[k]`` is the cumulative product of (1 - beta_i) up to timestep k,
with ``alpha_bar[0] = 1`` (the clean end) and ``alpha_bar[T]`` the most-noised
level.  Reverse iterations are counted from pure noise, so a latent that has
completed ``i`` reverse iterations sits at timestep ``T - i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ScheduleError

DEFAULT_T = 100
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02


@dataclass(frozen=True)
class NoiseSchedule:
    T: int
    alpha_bar: np.ndarray = field(repr=False)

    def __post_init__(self):
        ab = np.asarray(self.alpha_bar, dtype=np.float64)
        if self.T < 1:
            raise ScheduleError(f"T must be >= 1, got {self.T}")
        if ab.shape != (self.T + 1,):
            raise ScheduleError(f"alpha_bar must have length T+1={self.T + 1}, got {ab.shape}")
        if ab[0] != 1.0:
            raise ScheduleError("alpha_bar[0] must equal 1 exactly")
        if not np.all(np.diff(ab) < 0.0):
            raise ScheduleError("alpha_bar must be strictly decreasing")
        if ab[-1] <= 0.0:
            raise ScheduleError("alpha_bar[T] must stay positive")
        object.__setattr__(self, "alpha_bar", ab)

    def alpha_bar_at(self, k: int) -> float:
        """alpha_bar at timestep k (0 = clean, T = most noised)."""
        if not 0 <= k <= self.T:
            raise ScheduleError(f"timestep {k} outside [0, {self.T}]")
        return float(self.alpha_bar[k])

    def level_for_iteration(self, iteration: int) -> float:
        """alpha_bar for a latent that has completed `iteration` reverse steps."""
        if not 0 <= iteration <= self.T:
            raise ScheduleError(f"iteration {iteration} outside [0, {self.T}]")
        return float(self.alpha_bar[self.T - iteration])


def build_schedule(
    T: int = DEFAULT_T,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """Linear betas from beta_start to beta_end over T steps."""
    if T < 1:
        raise ScheduleError(f"T must be >= 1, got {T}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ScheduleError(
            f"betas must satisfy 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )
    betas = np.linspace(beta_start, beta_end, T)
    alpha_bar = np.empty(T + 1, dtype=np.float64)
    alpha_bar[0] = 1.0
    alpha_bar[1:] = np.cumprod(1.0 - betas)
    return NoiseSchedule(T=T, alpha_bar=alpha_bar)
