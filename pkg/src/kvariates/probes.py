"""Probe functions: maps applied to points before computing sampling weights.

A probe rewrites each dataset point to a d-dimensional image; the seeding
weights are then distances from the *images* to the current centers. The
identity probe recovers classical behavior, the nearest-anchor probe snaps
points onto a synopsis set, and the minibatch gate zeroes the weight of
points outside the active batch by mapping them onto their nearest center.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import pairwise_sq_dists

__all__ = ["Probe"]


@dataclass(frozen=True)
class Probe:
    kind: str  # "identity" | "nearest_synopsis" | "minibatch_gate" | "custom"
    anchors: Optional[np.ndarray] = None  # (s, d) snap targets
    batch_mask: Optional[np.ndarray] = None  # bool (m,), True = in active batch
    fn: Optional[Callable[[np.ndarray, int], np.ndarray]] = None
    iteration_aware: bool = False

    @staticmethod
    def identity() -> "Probe":
        return Probe("identity")

    @staticmethod
    def nearest_synopsis(anchors: np.ndarray) -> "Probe":
        anchors = np.atleast_2d(np.asarray(anchors, dtype=np.float64))
        if anchors.shape[0] == 0:
            raise ValueError("need at least one anchor")
        return Probe("nearest_synopsis", anchors=anchors)

    @staticmethod
    def minibatch_gate(batch_mask: np.ndarray) -> "Probe":
        mask = np.asarray(batch_mask, dtype=bool)
        return Probe("minibatch_gate", batch_mask=mask, iteration_aware=True)

    @staticmethod
    def custom(fn: Callable[[np.ndarray, int], np.ndarray], iteration_aware: bool = False) -> "Probe":
        return Probe("custom", fn=fn, iteration_aware=iteration_aware)

    def map(
        self,
        points: np.ndarray,
        iteration: int,
        centers: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """Image of every point at this iteration, deterministic given state."""
        points = np.atleast_2d(points)
        if self.kind == "identity":
            return points
        if self.kind == "nearest_synopsis":
            idx = pairwise_sq_dists(points, self.anchors).argmin(axis=1)
            return self.anchors[idx]
        if self.kind == "minibatch_gate":
            if self.batch_mask.shape[0] != points.shape[0]:
                raise ValueError("batch mask must be one flag per point")
            out = points.copy()
            if centers is not None and len(centers) > 0:
                outside = ~self.batch_mask
                if np.any(outside):
                    near = pairwise_sq_dists(points[outside], centers).argmin(axis=1)
                    out[outside] = np.asarray(centers)[near]
            return out
        return np.atleast_2d(self.fn(points, iteration))
