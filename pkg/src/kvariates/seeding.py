"""Biased seeding with pluggable probes and densities, plus its classical
specialization, Lloyd refinement and the probe-stretch estimator."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .densities import LocalDensity, dirac_densities
from .geometry import (
    CenterProvenance,
    CenterSet,
    Dataset,
    Distortion,
    SQUARED_L2,
    nearest_center_indices,
    pairwise_sq_dists,
)
from .probes import Probe
from .sampling import categorical, rng_from_seed

__all__ = [
    "SeedingConfig",
    "kvariates_seed",
    "kmeanspp_seed",
    "lloyd_refine",
    "EtaEstimate",
    "estimate_eta",
]


def min_distortion_columns(
    distortion: Distortion, points: np.ndarray, centers: Sequence[np.ndarray]
) -> np.ndarray:
    """Per-point distortion to the nearest center, one column at a time.

    Column-wise evaluation keeps the floats bitwise identical to the
    incremental caches other samplers maintain (a single matrix product can
    round differently), which the fixed-seed reduction identities rely on.
    """
    dmin: Optional[np.ndarray] = None
    for c in centers:
        col = distortion.pairwise(points, np.asarray(c)[None, :])[:, 0]
        dmin = col if dmin is None else np.minimum(dmin, col)
    if dmin is None:
        raise ValueError("need at least one center")
    return dmin


@dataclass(frozen=True)
class SeedingConfig:
    """Inputs of one seeding run; densities default to point masses."""

    k: int
    distortion: Distortion = SQUARED_L2
    seed: int = 0
    probe: Probe = field(default_factory=Probe.identity)
    densities: Optional[Sequence[LocalDensity]] = None

    def resolve_densities(self, data: Dataset) -> Sequence[LocalDensity]:
        if self.densities is None:
            return dirac_densities(data)
        if len(self.densities) != data.m:
            raise ValueError("need one density per data point")
        return self.densities

    def validate(self, data: Dataset) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        dens = self.densities
        all_dirac = dens is None or all(d.kind == "dirac" for d in dens)
        if all_dirac and self.k > data.m:
            raise ValueError("k cannot exceed m for point-mass densities")


def kvariates_seed(
    data: Dataset, cfg: SeedingConfig, trace: Optional[list] = None
) -> CenterSet:
    """Generalized seeding: k rounds of (pick reference, sample its density).

    The first reference point is weight-uniform; afterwards references are
    drawn proportionally to the distortion from each point's probe image to
    the nearest center already emitted. If every image coincides with a
    center the draw falls back to weight-uniform. `trace`, when given,
    collects the normalized weight vector of every draw.
    """
    cfg.validate(data)
    densities = cfg.resolve_densities(data)
    rng = rng_from_seed(cfg.seed)

    centers: list[np.ndarray] = []
    prov: list[CenterProvenance] = []
    for t in range(1, cfg.k + 1):
        if t == 1:
            weights = data.weights
        else:
            images = cfg.probe.map(data.points, t, np.stack(centers))
            dmin = min_distortion_columns(cfg.distortion, images, centers)
            weights = data.weights * dmin
            if float(weights.sum()) <= 0.0:
                weights = data.weights  # every image sits on a center
        if trace is not None:
            trace.append(weights / weights.sum())
        ref = categorical(rng, weights)
        density = densities[ref]
        centers.append(np.asarray(density.sample(rng), dtype=np.float64))
        prov.append(
            CenterProvenance(
                iteration=t,
                source=f"point:{ref}",
                reference=ref,
                noisy=density.kind != "dirac",
            )
        )
    return CenterSet(np.stack(centers), tuple(prov))


def kmeanspp_seed(
    data: Dataset, k: int, seed: int = 0, trace: Optional[list] = None
) -> CenterSet:
    """Classical D^2 seeding, written directly with an incremental cache."""
    if not (1 <= k <= data.m):
        raise ValueError("need 1 <= k <= m")
    rng = rng_from_seed(seed)

    if trace is not None:
        trace.append(data.weights / data.weights.sum())
    first = categorical(rng, data.weights)
    chosen = [first]
    cache = pairwise_sq_dists(data.points, data.points[first][None, :])[:, 0]
    for t in range(2, k + 1):
        weights = data.weights * cache
        if float(weights.sum()) <= 0.0:
            weights = data.weights
        if trace is not None:
            trace.append(weights / weights.sum())
        nxt = categorical(rng, weights)
        chosen.append(nxt)
        np.minimum(
            cache,
            pairwise_sq_dists(data.points, data.points[nxt][None, :])[:, 0],
            out=cache,
        )
    prov = tuple(
        CenterProvenance(iteration=t + 1, source=f"point:{i}", reference=i)
        for t, i in enumerate(chosen)
    )
    return CenterSet(data.points[np.array(chosen, dtype=np.intp)], prov)


def lloyd_refine(data: Dataset, centers: CenterSet, iters: int) -> CenterSet:
    """Assign/recenter loop; empty clusters keep their previous center.

    The potential is nonincreasing across iterations; the loop stops early
    at a fixed point.
    """
    if len(centers) < 1:
        raise ValueError("need at least one center")
    current = np.array(centers.centers)
    for _ in range(iters):
        assign = pairwise_sq_dists(data.points, current).argmin(axis=1)
        updated = current.copy()
        for b in range(current.shape[0]):
            mask = assign == b
            if np.any(mask):
                updated[b] = np.average(
                    data.points[mask], axis=0, weights=data.weights[mask]
                )
        if np.array_equal(updated, current):
            break
        current = updated
    return CenterSet(current, centers.provenance)


@dataclass(frozen=True)
class EtaEstimate:
    """Probe-stretch estimate; `degenerate` marks an all-skipped run."""

    value: float
    samples: int
    degenerate: bool = False

    def __float__(self) -> float:
        return self.value


def _optimal_clusters(data: Dataset, c_opt: CenterSet) -> list[np.ndarray]:
    own = nearest_center_indices(data, c_opt)
    return [
        np.flatnonzero(own == b)
        for b in range(len(c_opt))
        if np.any(own == b)
    ]


def _stretch_ratio(
    data: Dataset,
    probe: Probe,
    cluster: np.ndarray,
    anchor_pos: int,
    center_idx: np.ndarray,
    iteration: int,
) -> Optional[float]:
    """One Definition-style sample: raw relative potential over probed one.

    Returns None when the probed denominator vanishes (the guard case).
    """
    sub = data.subset(cluster)
    centers = data.points[center_idx]
    images = probe.map(sub.points, iteration, centers)
    probed_anchor = images[anchor_pos][None, :]
    den_probe = float(
        np.dot(sub.weights, pairwise_sq_dists(images, probed_anchor)[:, 0])
    )
    if den_probe <= 0.0:
        return None
    den_raw = float(
        np.dot(
            sub.weights,
            pairwise_sq_dists(sub.points, sub.points[anchor_pos][None, :])[:, 0],
        )
    )
    if den_raw <= 0.0:
        return None  # identical cluster: raw relative potential undefined
    num_raw = float(np.dot(sub.weights, pairwise_sq_dists(sub.points, centers).min(axis=1)))
    num_probe = float(np.dot(sub.weights, pairwise_sq_dists(images, centers).min(axis=1)))
    lhs = num_raw / den_raw
    rhs = num_probe / den_probe
    if rhs <= 0.0:
        return math.inf if lhs > 0.0 else 1.0
    return lhs / rhs


def estimate_eta(
    data: Dataset,
    probe: Probe,
    c_opt: CenterSet,
    trials: Optional[int] = None,
    seed: int = 0,
) -> EtaEstimate:
    """Estimate the probe's stretch factor against optimal clusters.

    Candidate center sets are subsets of data points of size <= k (k taken
    from `c_opt`), which under-estimates the stretch; bound checks inflate
    the estimate accordingly. `trials=None` enumerates every (cluster,
    anchor, candidate set) exhaustively.
    """
    k = len(c_opt)
    clusters = _optimal_clusters(data, c_opt)
    best = 0.0
    used = 0

    if trials is None:
        for cluster in clusters:
            for anchor_pos in range(cluster.size):
                for size in range(1, k + 1):
                    for combo in itertools.combinations(range(data.m), size):
                        r = _stretch_ratio(
                            data, probe, cluster, anchor_pos,
                            np.array(combo, dtype=np.intp), iteration=1,
                        )
                        if r is None:
                            continue
                        used += 1
                        best = max(best, r - 1.0)
    else:
        rng = rng_from_seed(seed)
        for _ in range(trials):
            cluster = clusters[int(rng.integers(len(clusters)))]
            anchor_pos = int(rng.integers(cluster.size))
            size = int(rng.integers(1, k + 1))
            combo = rng.choice(data.m, size=size, replace=False)
            r = _stretch_ratio(
                data, probe, cluster, anchor_pos,
                np.asarray(combo, dtype=np.intp), iteration=1,
            )
            if r is None:
                continue
            used += 1
            best = max(best, r - 1.0)

    if used == 0:
        return EtaEstimate(0.0, 0, degenerate=True)
    return EtaEstimate(max(best, 0.0), used, degenerate=False)
