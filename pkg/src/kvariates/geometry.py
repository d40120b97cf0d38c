"""Points, potentials, distortions and the exact small-instance optimum.

Everything here is a pure function over immutable inputs; these are the
scalar quantities (optimal potential, bias, variance, radii) that every
approximation bound in the package consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

__all__ = [
    "Dataset",
    "CenterProvenance",
    "CenterSet",
    "Distortion",
    "PotentialBreakdown",
    "sq_dist",
    "pairwise_sq_dists",
    "potential",
    "centroid",
    "brute_force_optimum",
    "phi_bias",
    "phi_variance",
    "enclosing_radius",
    "total_jensen",
]

BRUTE_FORCE_MAX_POINTS = 14


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Ordered list of d-dimensional points with optional positive weights."""

    points: np.ndarray  # (m, d)
    weights: np.ndarray  # (m,)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValueError("dataset needs at least one point of dimension >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("all coordinates must be finite")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (pts.shape[0],):
            raise ValueError("weights must be one per point")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "weights", _freeze(w))

    @classmethod
    def from_points(
        cls, points: Sequence | np.ndarray, weights: Optional[Sequence] = None
    ) -> "Dataset":
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        w = np.ones(pts.shape[0]) if weights is None else np.asarray(weights, float)
        return cls(pts, w)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def subset(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        if idx.size == 0:
            raise ValueError("empty subset")
        return Dataset(self.points[idx], self.weights[idx])


@dataclass(frozen=True)
class CenterProvenance:
    """Where one center came from: iteration, source tag, reference index."""

    iteration: int
    source: str = ""
    reference: int = -1
    noisy: bool = False


@dataclass(frozen=True)
class CenterSet:
    """Ordered chosen centers plus per-center provenance."""

    centers: np.ndarray  # (c, d)
    provenance: tuple = ()

    def __post_init__(self) -> None:
        ctr = np.asarray(self.centers, dtype=np.float64)
        if ctr.ndim == 1:
            ctr = ctr.reshape(-1, 1)
        if ctr.ndim != 2 or ctr.shape[0] == 0:
            raise ValueError("center set must hold at least one center")
        if not np.all(np.isfinite(ctr)):
            raise ValueError("centers must be finite")
        if self.provenance and len(self.provenance) != ctr.shape[0]:
            raise ValueError("provenance must align with centers")
        object.__setattr__(self, "centers", _freeze(ctr))
        object.__setattr__(self, "provenance", tuple(self.provenance))

    def __len__(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True)
class Distortion:
    """Pluggable distortion: squared L2 or the conformal skew-Jensen form.

    The Jensen variant takes a convex generator over points; convexity is
    caller-asserted on the data's hull.
    """

    kind: str = "squared_l2"
    alpha: Optional[float] = None
    generator: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self) -> None:
        if self.kind not in ("squared_l2", "total_jensen"):
            raise ValueError(f"unknown distortion kind {self.kind!r}")
        if self.kind == "total_jensen":
            if self.generator is None:
                raise ValueError("total_jensen distortion needs a generator")
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise ValueError("total_jensen alpha must lie in (0, 1)")

    @staticmethod
    def squared_l2() -> "Distortion":
        return Distortion()

    @staticmethod
    def jensen(alpha: float, generator: Callable) -> "Distortion":
        return Distortion("total_jensen", alpha, generator)

    def pairwise(self, points: np.ndarray, centers: np.ndarray) -> np.ndarray:
        """(m, c) matrix of distortions from each point to each center."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        if self.kind == "squared_l2":
            return pairwise_sq_dists(points, centers)
        out = np.empty((points.shape[0], centers.shape[0]))
        for i, a in enumerate(points):
            for j, c in enumerate(centers):
                out[i, j] = total_jensen(a, c, self.alpha, self.generator)
        return out


SQUARED_L2 = Distortion.squared_l2()


def sq_dist(a: np.ndarray, b: np.ndarray) -> float:
    """Squared Euclidean distance between two points of equal dimension."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    diff = a - b
    return float(np.dot(diff, diff))


def pairwise_sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(m, c) squared L2 distances, clipped at 0 against rounding."""
    points = np.atleast_2d(points)
    centers = np.atleast_2d(centers)
    if points.shape[1] != centers.shape[1]:
        raise ValueError("dimension mismatch")
    sq = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centers.T
        + np.sum(centers**2, axis=1)[None, :]
    )
    return np.maximum(sq, 0.0)


def _as_center_array(centers) -> np.ndarray:
    if isinstance(centers, CenterSet):
        return centers.centers
    arr = np.asarray(centers, dtype=np.float64)
    return np.atleast_2d(arr)


def potential(
    data: Dataset, centers, distortion: Distortion = SQUARED_L2
) -> float:
    """Weighted sum over points of the distortion to the nearest center."""
    ctr = _as_center_array(centers)
    if ctr.shape[0] == 0:
        raise ValueError("empty center set")
    d = distortion.pairwise(data.points, ctr)
    return float(np.dot(data.weights, d.min(axis=1)))


def min_sq_dists(data: Dataset, centers) -> np.ndarray:
    """Per-point squared distance to the nearest center (unweighted)."""
    return pairwise_sq_dists(data.points, _as_center_array(centers)).min(axis=1)


def centroid(data: Dataset) -> np.ndarray:
    """Weighted arithmetic mean of a nonempty dataset."""
    return np.average(data.points, axis=0, weights=data.weights)


def _restricted_growth_strings(m: int, k: int) -> Iterator[np.ndarray]:
    """All partitions of m items into exactly k blocks, in lexicographic
    order of their canonical label encoding."""
    labels = np.zeros(m, dtype=np.int8)

    def rec(i: int, used: int):
        if i == m:
            if used == k:
                yield labels.copy()
            return
        if used + (m - i) < k:  # cannot reach k blocks any more
            return
        top = min(used + 1, k)
        for lab in range(top):
            labels[i] = lab
            yield from rec(i + 1, used + (1 if lab == used else 0))

    yield from rec(1, 1)  # first item always opens block 0


def brute_force_optimum(data: Dataset, k: int) -> tuple[CenterSet, float]:
    """Exact k-clustering optimum by enumerating all set partitions.

    Returns the centroids of the minimizing partition and its potential.
    Ties resolve to the lexicographically smallest partition encoding.
    Guarded at m <= 14; enumeration cost grows with the Stirling numbers.
    """
    m = data.m
    if m > BRUTE_FORCE_MAX_POINTS:
        raise ValueError(f"brute force guarded at m <= {BRUTE_FORCE_MAX_POINTS}")
    if not (1 <= k <= m):
        raise ValueError("need 1 <= k <= m")

    pts, w = data.points, data.weights
    wpts = pts * w[:, None]
    total_sq = float(np.dot(w, np.sum(pts**2, axis=1)))

    best_cost = math.inf
    best_labels: Optional[np.ndarray] = None
    chunk: list[np.ndarray] = []

    def flush(chunk_labels: list[np.ndarray]):
        nonlocal best_cost, best_labels
        lab = np.stack(chunk_labels)  # (p, m)
        onehot = lab[:, :, None] == np.arange(k)[None, None, :]  # (p, m, k)
        counts = np.einsum("pmk,m->pk", onehot, w)
        sums = np.einsum("pmk,md->pkd", onehot, wpts)
        # block SSE totals: sum_a w|a|^2 - sum_blocks |sum|^2/count
        costs = total_sq - np.sum(np.sum(sums**2, axis=2) / counts, axis=1)
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost = float(costs[i])
            best_labels = lab[i]

    for labels in _restricted_growth_strings(m, k):
        chunk.append(labels)
        if len(chunk) >= 100_000:
            flush(chunk)
            chunk = []
    if chunk:
        flush(chunk)
    assert best_labels is not None

    centers = np.stack(
        [centroid(data.subset(np.flatnonzero(best_labels == b))) for b in range(k)]
    )
    prov = tuple(
        CenterProvenance(iteration=b + 1, source=f"optimum-block:{b}")
        for b in range(k)
    )
    return CenterSet(centers, prov), max(best_cost, 0.0)


def nearest_center_indices(data: Dataset, centers) -> np.ndarray:
    """Index of each point's nearest center, ties to the lowest index."""
    return pairwise_sq_dists(data.points, _as_center_array(centers)).argmin(axis=1)


def phi_bias(data: Dataset, densities: Sequence, c_opt: CenterSet) -> float:
    """Weighted squared gap between density means and nearest optimal centers."""
    if len(densities) != data.m:
        raise ValueError("one density per point required")
    mus = np.stack([dens.mean() for dens in densities])
    if mus.shape[1] != data.d:
        raise ValueError("density mean dimension mismatch")
    own = nearest_center_indices(data, c_opt)
    gaps = mus - c_opt.centers[own]
    return float(np.dot(data.weights, np.sum(gaps**2, axis=1)))


def phi_variance(densities: Sequence, weights: Optional[np.ndarray] = None) -> float:
    """Weighted sum of covariance traces of the per-point densities."""
    traces = np.array([dens.trace_cov() for dens in densities])
    if weights is None:
        return float(np.sum(traces))
    return float(np.dot(np.asarray(weights, float), traces))


def enclosing_radius(data: Dataset, norm: str = "l2") -> float:
    """L2 mode: exact max pairwise distance (diameter), blocked O(m^2).

    L1 mode: upper bound of the smallest enclosing L1 ball radius, taken as
    the max L1 distance to the coordinate-wise midrange center.
    """
    pts = data.points
    if norm == "l1":
        center = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
        return float(np.abs(pts - center).sum(axis=1).max())
    if norm != "l2":
        raise ValueError("norm must be 'l1' or 'l2'")
    m = pts.shape[0]
    if m == 1:
        return 0.0
    # a pair (i, j) can only beat a known bound when r_i + r_j > bound for
    # the centroid radii r; sweeping blocks in descending r against the
    # still-eligible prefix keeps the scan exact while pruning hard
    center = pts.mean(axis=0)
    radii = np.sqrt(pairwise_sq_dists(pts, center[None, :])[:, 0])
    i1 = int(radii.argmax())
    d1 = pairwise_sq_dists(pts, pts[i1][None, :])[:, 0]
    i2 = int(d1.argmax())
    best = float(d1[i2])  # squared double-sweep lower bound
    d2 = pairwise_sq_dists(pts, pts[i2][None, :])[:, 0]
    pair = (i1, i2)
    if float(d2.max()) > best:
        best = float(d2.max())
        pair = (i2, int(d2.argmax()))

    order = np.argsort(-radii, kind="stable")
    pts_s, r_s = pts[order], radii[order]
    block = max(1, int(2.0e6 // max(m, 1)))
    for lo in range(0, m, block):
        r_block_max = float(r_s[lo])
        if r_block_max + float(r_s[0]) <= math.sqrt(best):
            break  # no remaining pair can improve the bound
        thresh = math.sqrt(best) - r_block_max
        plen = int(np.searchsorted(-r_s, -thresh, side="left"))
        if plen == 0:
            continue
        sq = pairwise_sq_dists(pts_s[lo : lo + block], pts_s[:plen])
        flat = int(sq.argmax())
        if float(sq.flat[flat]) > best:
            best = float(sq.flat[flat])
            row, col = divmod(flat, sq.shape[1])
            pair = (int(order[lo + row]), int(order[col]))
    # the quadratic form cancels badly near zero; settle the winning pair
    # with the exact difference form
    return math.sqrt(sq_dist(pts[pair[0]], pts[pair[1]]))


def total_jensen(
    a: np.ndarray, b: np.ndarray, alpha: float, generator: Callable
) -> float:
    """Conformal skew-Jensen divergence between two points.

    J = alpha*phi(a) + (1-alpha)*phi(b) - phi(alpha*a + (1-alpha)*b), scaled
    by 1/sqrt(1+U^2) with U the generator's chord slope between a and b.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    gap = sq_dist(a, b)
    if gap == 0.0:  # equal points, or a squared gap that underflows
        return 0.0
    fa = float(generator(a))
    fb = float(generator(b))
    fmix = float(generator(alpha * a + (1.0 - alpha) * b))
    if not (math.isfinite(fa) and math.isfinite(fb) and math.isfinite(fmix)):
        raise ValueError("generator returned a non-finite value")
    jensen = alpha * fa + (1.0 - alpha) * fb - fmix
    slope = (fa - fb) / math.sqrt(gap)
    return jensen / math.sqrt(1.0 + slope * slope)


@dataclass(frozen=True)
class PotentialBreakdown:
    """The bound ingredients (optimal/bias/variance/stretch) and their
    composition Phi = (6+4*eta)*phi_opt + 2*phi_bias + 2*phi_variance."""

    phi_opt: float
    phi_bias: float
    phi_variance: float
    eta: float = 0.0
    phi: float = field(init=False)

    def __post_init__(self) -> None:
        for name in ("phi_opt", "phi_bias", "phi_variance", "eta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        object.__setattr__(
            self,
            "phi",
            (6.0 + 4.0 * self.eta) * self.phi_opt
            + 2.0 * self.phi_bias
            + 2.0 * self.phi_variance,
        )
