"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError


def as_vector(x, name: str = "vector", d: int | None = None) -> np.ndarray:
    """Coerce to a finite float64 1-D array, optionally checking its length."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if d is not None and arr.shape[0] != d:
        raise DimensionError(f"{name} has dimension {arr.shape[0]}, expected {d}")
    return arr


def check_same_dimension(*vectors: np.ndarray, names: str = "operands") -> int:
    dims = {v.shape[-1] for v in vectors}
    if len(dims) != 1:
        raise DimensionError(f"{names} disagree on dimension: {sorted(dims)}")
    return dims.pop()


def check_unit_interval(x: float, name: str) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")
    return x
