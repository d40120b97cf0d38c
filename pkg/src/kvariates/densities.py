"""Per-point noise models sampled when a reference point is chosen.

Three families: a point mass at mu, an independent per-coordinate Laplace
around mu, and a uniform choice among a stored member subset (the discrete
density that turns global seeding into a per-peer protocol).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import centroid, Dataset
from .sampling import categorical

__all__ = ["LocalDensity", "dirac_densities", "product_laplace_densities"]


@dataclass(frozen=True)
class LocalDensity:
    """One point's local density; `owner` is the index of that point."""

    kind: str  # "dirac" | "product_laplace" | "uniform_on_subset"
    mu: Optional[np.ndarray] = None
    scale: Optional[np.ndarray] = None  # per-coordinate Laplace scale b
    members: Optional[np.ndarray] = None  # (s, d) support of the uniform kind
    owner: int = -1

    def __post_init__(self) -> None:
        if self.kind in ("dirac", "product_laplace"):
            if self.mu is None:
                raise ValueError(f"{self.kind} density needs a mean")
            mu = np.asarray(self.mu, dtype=np.float64).ravel()
            object.__setattr__(self, "mu", mu)
            if self.kind == "product_laplace":
                scale = np.broadcast_to(
                    np.asarray(self.scale, dtype=np.float64), mu.shape
                ).copy()
                if np.any(scale <= 0):
                    raise ValueError("Laplace scale must be positive")
                object.__setattr__(self, "scale", scale)
        elif self.kind == "uniform_on_subset":
            members = np.atleast_2d(np.asarray(self.members, dtype=np.float64))
            if members.shape[0] == 0:
                raise ValueError("uniform_on_subset needs a nonempty member list")
            object.__setattr__(self, "members", members)
        else:
            raise ValueError(f"unknown density kind {self.kind!r}")

    @staticmethod
    def dirac(mu, owner: int = -1) -> "LocalDensity":
        return LocalDensity("dirac", mu=mu, owner=owner)

    @staticmethod
    def product_laplace(mu, scale, owner: int = -1) -> "LocalDensity":
        return LocalDensity("product_laplace", mu=mu, scale=scale, owner=owner)

    @staticmethod
    def uniform_on_subset(members, owner: int = -1) -> "LocalDensity":
        return LocalDensity("uniform_on_subset", members=members, owner=owner)

    def mean(self) -> np.ndarray:
        if self.kind == "uniform_on_subset":
            return centroid(Dataset.from_points(self.members))
        return self.mu

    def trace_cov(self) -> float:
        """Trace of the density's covariance matrix."""
        if self.kind == "dirac":
            return 0.0
        if self.kind == "product_laplace":
            return float(np.sum(2.0 * self.scale**2))
        mu = self.mean()
        return float(np.mean(np.sum((self.members - mu) ** 2, axis=1)))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "dirac":
            return self.mu
        if self.kind == "product_laplace":
            return self.mu + rng.laplace(0.0, self.scale)
        idx = categorical(rng, np.ones(self.members.shape[0]))
        return self.members[idx]

    def pdf(self, x: np.ndarray) -> float:
        """Density value at x (point-mass kinds use the discrete convention)."""
        x = np.asarray(x, dtype=np.float64).ravel()
        if self.kind == "dirac":
            return 1.0 if np.array_equal(x, self.mu) else 0.0
        if self.kind == "product_laplace":
            z = np.abs(x - self.mu) / self.scale
            return float(np.exp(-np.sum(z)) / np.prod(2.0 * self.scale))
        hits = np.all(self.members == x, axis=1).sum()
        return float(hits) / self.members.shape[0]

    def reanchor(self, mu) -> "LocalDensity":
        """Same noise shape centered at a new reference point."""
        if self.kind == "uniform_on_subset":
            return self
        return LocalDensity(self.kind, mu=mu, scale=self.scale, owner=self.owner)


def dirac_densities(data: Dataset) -> list[LocalDensity]:
    """One point mass per data point (the classical seeding case)."""
    return [LocalDensity.dirac(p, owner=i) for i, p in enumerate(data.points)]


def product_laplace_densities(data: Dataset, scale) -> list[LocalDensity]:
    """Per-point Laplace noise of a common per-coordinate scale b."""
    return [
        LocalDensity.product_laplace(p, scale, owner=i)
        for i, p in enumerate(data.points)
    ]


def sample_product_laplace(
    mu: np.ndarray, sigma: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw from a product of Laplace(sigma/sqrt(2)) around mu.

    The per-coordinate scale b = sigma/sqrt(2) gives variance sigma^2 per
    coordinate.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    mu = np.asarray(mu, dtype=np.float64).ravel()
    return mu + rng.laplace(0.0, sigma / math.sqrt(2.0), size=mu.shape)
