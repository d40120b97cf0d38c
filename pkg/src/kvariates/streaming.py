"""Stream seeding over weighted synopses and one-center-per-minibatch
online seeding, with their spread and coverage statistics."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .geometry import (
    CenterProvenance,
    CenterSet,
    Dataset,
    SQUARED_L2,
    enclosing_radius,
    nearest_center_indices,
    pairwise_sq_dists,
)
from .sampling import categorical, mix_seed, rng_from_seed
from .seeding import min_distortion_columns

__all__ = [
    "SynopsisSet",
    "MinibatchStream",
    "build_synopses_online",
    "build_synopses_uniform",
    "skmeans",
    "probe_spread",
    "okmeans_run",
    "VarsigmaEstimate",
    "estimate_varsigma",
]


@dataclass(frozen=True)
class SynopsisSet:
    """Weighted summary points (s_j, m_j) standing for many stream points."""

    points: np.ndarray  # (s, d)
    counts: np.ndarray  # (s,) weighted tallies
    capacity: int

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        cnt = np.asarray(self.counts, dtype=np.float64)
        if pts.shape[0] == 0 or pts.shape[0] != cnt.shape[0]:
            raise ValueError("need one count per synopsis point")
        if np.any(cnt <= 0):
            raise ValueError("synopsis counts must be positive")
        if pts.shape[0] > self.capacity:
            raise ValueError("more synopses than capacity")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "counts", cnt)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def consumed(self) -> float:
        return float(self.counts.sum())


def _stream_rows(stream: Union[Dataset, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(stream, Dataset):
        return stream.points, stream.weights
    pts = np.atleast_2d(np.asarray(stream, dtype=np.float64))
    return pts, np.ones(pts.shape[0])


def build_synopses_online(stream: Union[Dataset, np.ndarray], n: int) -> SynopsisSet:
    """Single-pass nearest-mean summarizer.

    The first n distinct points seed the synopses; every other point joins
    its nearest synopsis, which moves by running (weighted) mean.
    """
    if n < 1:
        raise ValueError("capacity must be >= 1")
    rows, weights = _stream_rows(stream)
    if rows.shape[0] == 0:
        raise ValueError("empty stream")

    points: list[np.ndarray] = []
    counts: list[float] = []
    for a, w in zip(rows, weights):
        if points:
            d = pairwise_sq_dists(a[None, :], np.stack(points))[0]
            j = int(d.argmin())
        if not points or (len(points) < n and d[j] > 0.0):
            points.append(a.astype(np.float64))
            counts.append(float(w))
            continue
        total = counts[j] + w
        points[j] = points[j] + (a - points[j]) * (w / total)
        counts[j] = total
    return SynopsisSet(np.stack(points), np.array(counts), capacity=n)


def build_synopses_uniform(
    stream: Union[Dataset, np.ndarray], n: int, rng_seed: int = 0
) -> SynopsisSet:
    """Reservoir of n uniform samples, weighted by a second-pass 1-NN count."""
    if n < 1:
        raise ValueError("capacity must be >= 1")
    rows, weights = _stream_rows(stream)
    m = rows.shape[0]
    if m == 0:
        raise ValueError("empty stream")
    rng = rng_from_seed(rng_seed)

    reservoir: list[int] = []
    for i in range(m):
        if i < n:
            reservoir.append(i)
        else:
            j = int(rng.integers(0, i + 1))
            if j < n:
                reservoir[j] = i
    pts = rows[np.array(reservoir, dtype=np.intp)]

    assign = pairwise_sq_dists(rows, pts).argmin(axis=1)
    counts = np.zeros(pts.shape[0])
    np.add.at(counts, assign, weights)
    live = counts > 0  # duplicate reservoir rows may shadow each other
    return SynopsisSet(pts[live], counts[live], capacity=n)


def skmeans(
    stream: Union[Dataset, np.ndarray],
    n: int,
    k: int,
    builder: Union[str, Callable] = "online",
    rng_seed: int = 0,
    trace: Optional[list] = None,
) -> CenterSet:
    """Seed k centers from a synopsis summary of the stream.

    The first pick is uniform over synopses; later picks weight each
    synopsis by count times squared distance to the nearest chosen center.
    """
    if isinstance(builder, str):
        if builder == "online":
            synopses = build_synopses_online(stream, n)
        elif builder == "uniform":
            # reservoir draws come from a derived stream so the center draws
            # below stay aligned with the online-builder case
            synopses = build_synopses_uniform(stream, n, rng_seed=mix_seed(rng_seed, 1))
        else:
            raise ValueError(f"unknown builder {builder!r}")
    else:
        synopses = builder(stream, n)
    if k > synopses.size:
        raise ValueError("k exceeds the number of live synopses")

    rng = rng_from_seed(rng_seed)
    chosen: list[int] = []
    for t in range(1, k + 1):
        if t == 1:
            weights = np.ones(synopses.size)
        else:
            dmin = min_distortion_columns(
                SQUARED_L2,
                synopses.points,
                [synopses.points[j] for j in chosen],
            )
            weights = synopses.counts * dmin
            if float(weights.sum()) <= 0.0:
                weights = synopses.counts
        if trace is not None:
            trace.append(weights / weights.sum())
        chosen.append(categorical(rng, weights))
    prov = tuple(
        CenterProvenance(iteration=t + 1, source=f"synopsis:{j}", reference=j)
        for t, j in enumerate(chosen)
    )
    return CenterSet(synopses.points[np.array(chosen, dtype=np.intp)], prov)


def probe_spread(stream: Union[Dataset, np.ndarray], synopses: SynopsisSet) -> float:
    """Total squared displacement of stream points onto nearest synopses."""
    rows, weights = _stream_rows(stream)
    d = pairwise_sq_dists(rows, synopses.points).min(axis=1)
    return float(np.dot(weights, d))


@dataclass(frozen=True)
class MinibatchStream:
    """Ordered batches partitioning a stream; each samples one center."""

    batches: tuple

    def __post_init__(self) -> None:
        if not self.batches:
            raise ValueError("need at least one batch")
        for b in self.batches:
            if not isinstance(b, Dataset):
                raise TypeError("batches must be Dataset slices")
        object.__setattr__(self, "batches", tuple(self.batches))

    @classmethod
    def fixed_size(cls, data: Dataset, k: int, batch_size: Optional[int] = None) -> "MinibatchStream":
        """Split in row order; default size ceil(m/k)."""
        if batch_size is None:
            batch_size = -(-data.m // k)
        if batch_size < 1:
            raise ValueError("batch size must be >= 1")
        idx = np.arange(data.m)
        parts = [idx[i : i + batch_size] for i in range(0, data.m, batch_size)]
        return cls(tuple(data.subset(p) for p in parts))

    @property
    def full(self) -> Dataset:
        pts = np.concatenate([b.points for b in self.batches])
        w = np.concatenate([b.weights for b in self.batches])
        return Dataset(pts, w)

    def __len__(self) -> int:
        return len(self.batches)


def okmeans_run(
    stream: MinibatchStream,
    k: int,
    rng_seed: int = 0,
    trace: Optional[list] = None,
) -> CenterSet:
    """One center per minibatch: uniform from the first batch, then squared-
    distance weighted within each later batch against the centers so far.

    Exactly k batches are consumed; extras are ignored with a warning.
    """
    if len(stream) < k:
        raise ValueError("need at least k minibatches")
    if len(stream) > k:
        warnings.warn(f"{len(stream) - k} extra minibatches ignored", stacklevel=2)

    rng = rng_from_seed(rng_seed)
    centers: list[np.ndarray] = []
    prov: list[CenterProvenance] = []
    offset = 0
    for j in range(k):
        batch = stream.batches[j]
        if j == 0:
            weights = batch.weights
        else:
            dmin = min_distortion_columns(SQUARED_L2, batch.points, centers)
            weights = batch.weights * dmin
            if float(weights.sum()) <= 0.0:
                weights = batch.weights
        if trace is not None:
            trace.append(weights / weights.sum())
        pick = categorical(rng, weights)
        centers.append(batch.points[pick])
        prov.append(
            CenterProvenance(
                iteration=j + 1, source=f"batch:{j}", reference=offset + pick
            )
        )
        offset += batch.m
    return CenterSet(np.stack(centers), tuple(prov))


@dataclass(frozen=True)
class VarsigmaEstimate:
    """Batch-coverage constant estimate in (0, 1]; 0 flags a vacuous case."""

    value: float
    samples: int
    degenerate: bool = False

    def __float__(self) -> float:
        return self.value


def estimate_varsigma(
    stream: MinibatchStream,
    c_opt: CenterSet,
    trials: Optional[int] = None,
    seed: int = 0,
) -> VarsigmaEstimate:
    """Estimate the largest constant satisfying the two coverage conditions.

    Condition one compares each optimal cluster's pairwise spread to its
    pair count times the squared stream diameter (size-1 clusters skip).
    Condition two compares, for sampled center sets (subsets of stream
    points, size <= k), each intersecting batch's share of the cluster
    potential to the whole; batches that miss the cluster are excluded.
    `trials=None` enumerates center sets exhaustively.
    """
    full = stream.full
    k = len(c_opt)
    radius = enclosing_radius(full, "l2")
    if radius <= 0.0:
        return VarsigmaEstimate(1.0, 0, degenerate=True)

    own = nearest_center_indices(full, c_opt)
    clusters = [np.flatnonzero(own == b) for b in range(k) if np.any(own == b)]

    ratios: list[float] = []
    for cluster in clusters:
        if cluster.size < 2:
            continue
        pts = full.points[cluster]
        pair_sum = 0.5 * float(pairwise_sq_dists(pts, pts).sum())
        n_pairs = cluster.size * (cluster.size - 1) / 2
        ratios.append(pair_sum / (n_pairs * radius * radius))

    batch_of = np.concatenate(
        [np.full(b.m, j, dtype=np.intp) for j, b in enumerate(stream.batches)]
    )

    def coverage(cluster: np.ndarray, center_idx: np.ndarray) -> Optional[float]:
        d = pairwise_sq_dists(
            full.points[cluster], full.points[center_idx]
        ).min(axis=1)
        denom = float(np.dot(full.weights[cluster], d))
        if denom <= 0.0:
            return None
        worst = None
        for j in np.unique(batch_of[cluster]):
            inside = batch_of[cluster] == j
            share = float(np.dot(full.weights[cluster][inside], d[inside])) / denom
            worst = share if worst is None else min(worst, share)
        return worst

    used = 0
    if trials is None:
        for cluster in clusters:
            for size in range(1, k + 1):
                for combo in itertools.combinations(range(full.m), size):
                    r = coverage(cluster, np.array(combo, dtype=np.intp))
                    if r is not None:
                        ratios.append(r)
                        used += 1
    else:
        rng = rng_from_seed(seed)
        for _ in range(trials):
            cluster = clusters[int(rng.integers(len(clusters)))]
            size = int(rng.integers(1, k + 1))
            combo = rng.choice(full.m, size=size, replace=False)
            r = coverage(cluster, np.asarray(combo, dtype=np.intp))
            if r is not None:
                ratios.append(r)
                used += 1

    if not ratios:
        return VarsigmaEstimate(1.0, used, degenerate=True)
    return VarsigmaEstimate(min(min(ratios), 1.0), used, degenerate=False)
