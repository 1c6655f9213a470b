"""Deterministic RNG construction from structured integer keys.

Every stochastic operation in the package draws from a counter-based Philox
generator keyed by an explicit tuple of integers, so results never depend on
call order or global state.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def rng_from_key(*key: int) -> np.random.Generator:
    """Return a Philox generator keyed by the given integers."""
    if not key:
        raise ValueError("seed key must contain at least one integer")
    entropy = tuple(int(k) & _MASK64 for k in key)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
