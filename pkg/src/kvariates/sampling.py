"""Deterministic random-draw helpers shared by every sampler.

All categorical draws in the package go through :func:`categorical` so that
independently written algorithms consume randomness identically and
fixed-seed reduction identities hold bit-for-bit.
"""

from __future__ import annotations

import numpy as np

__all__ = ["rng_from_seed", "categorical", "uniform_index", "mix_seed"]

_MASK64 = (1 << 64) - 1


def rng_from_seed(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit unsigned seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def categorical(rng: np.random.Generator, weights: np.ndarray) -> int:
    """Draw one index with probability proportional to `weights`.

    Consumes exactly one uniform variate: a single draw is scaled onto the
    cumulative weight axis and the first bucket strictly above it wins, so
    zero-weight entries are never selected and ties go to the lowest index.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty 1-D array")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    cum = np.cumsum(w)
    total = cum[-1]
    if total <= 0.0:
        raise ValueError("weights sum to zero")
    u = rng.random() * total
    idx = int(np.searchsorted(cum, u, side="right"))
    if idx >= w.size:  # guard against u rounding up onto the total
        idx = int(np.flatnonzero(w > 0)[-1])
    return idx


def uniform_index(rng: np.random.Generator, n: int) -> int:
    """Uniform index in [0, n), drawn through :func:`categorical`."""
    return categorical(rng, np.ones(n))


def mix_seed(base_seed: int, index: int) -> int:
    """64-bit splitmix of (base seed, trial index) for independent streams."""
    z = (int(base_seed) + 0x9E3779B97F4A7C15 * (int(index) + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64
