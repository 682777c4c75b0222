"""Deterministic seed derivation.

Every random draw in the package flows through a generator seeded by
``derive_seed(master, *parts)``.  The parts identify the draw site
(step index, beam id, candidate ordinal, ...), so independent runs with the
same master seed reproduce each other bit for bit, and sub-runs can be
replayed in isolation.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = b"\x1f"


def derive_seed(master: int, *parts: int | str) -> int:
    """Hash (master, parts...) into a 64-bit seed via blake2b."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master)).encode("utf-8"))
    for part in parts:
        h.update(_SEP)
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest(), "big")


def rng_from(master: int, *parts: int | str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *parts))


def noise_vector(seed: int, d: int) -> np.ndarray:
    """Standard normal draw of dimension d from an isolated generator."""
    return np.random.default_rng(seed).standard_normal(d)
