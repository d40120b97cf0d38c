"""Synthetic cluster generators, peer constructions, the point-migration
process and CSV dataset I/O."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .geometry import Dataset, pairwise_sq_dists
from .sampling import rng_from_seed
from .seeding import kmeanspp_seed

__all__ = [
    "HyperrectClusterSpec",
    "PeerAssignment",
    "KNOWN_DATASET_SHAPES",
    "gen_hyperrect_clusters",
    "migrate_points",
    "peers_from_real",
    "load_dataset",
    "save_dataset",
    "validate_known_shape",
]

# expected (m, d) of the externally downloaded comparison datasets; loaders
# validate against these when a named file is supplied
KNOWN_DATASET_SHAPES = {
    "LifeSci": (26733, 10),
    "Image": (34112, 3),
    "EuropeDiff": (169308, 2),
    "Mopsi": (13467, 2),
}


def validate_known_shape(name: str, data: "Dataset") -> None:
    """Reject a named external dataset whose (m, d) does not match."""
    if name not in KNOWN_DATASET_SHAPES:
        raise KeyError(f"unknown dataset name {name!r}")
    expected = KNOWN_DATASET_SHAPES[name]
    if (data.m, data.d) != expected:
        raise ValueError(
            f"{name}: expected (m, d) = {expected}, got {(data.m, data.d)}"
        )


@dataclass(frozen=True)
class HyperrectClusterSpec:
    """Locally-uniform cluster soup: boxes with random corners and edges,
    appended until the point budget is reached."""

    d: int
    target_m: int = 20000
    max_points_per_cluster: int = 1000
    corner_low: float = 0.0
    corner_high: float = 10.0
    edge_low: float = 0.0  # exclusive
    edge_high: float = 2.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.d < 1 or self.target_m < 1 or self.max_points_per_cluster < 1:
            raise ValueError("d, target_m and max_points_per_cluster must be >= 1")
        if self.edge_high <= self.edge_low:
            raise ValueError("edge range must be nonempty")


@dataclass(frozen=True)
class PeerAssignment:
    """Peer id per point plus how the peers were constructed."""

    peer: np.ndarray  # (m,) int
    origin: str  # "true-cluster" | "kpp-voronoi" | "forgy-voronoi"
    n_peers: int

    def __post_init__(self) -> None:
        peer = np.asarray(self.peer, dtype=np.intp)
        if peer.ndim != 1 or peer.size == 0:
            raise ValueError("assignment must cover at least one point")
        if peer.min() < 0 or peer.max() >= self.n_peers:
            raise ValueError("peer ids out of range")
        object.__setattr__(self, "peer", peer)


def gen_hyperrect_clusters(spec: HyperrectClusterSpec) -> tuple[Dataset, PeerAssignment]:
    """Sample clusters uniform inside random hyperrectangles.

    Each box gets a uniform count in [1, max_points_per_cluster]; boxes are
    appended until the running total reaches target_m. The generating box is
    the point's peer.
    """
    rng = rng_from_seed(spec.rng_seed)
    chunks: list[np.ndarray] = []
    owners: list[np.ndarray] = []
    total = 0
    cluster = 0
    while total < spec.target_m:
        count = int(rng.integers(1, spec.max_points_per_cluster + 1))
        corner = rng.uniform(spec.corner_low, spec.corner_high, size=spec.d)
        # edge lengths in (edge_low, edge_high]
        edges = spec.edge_high - rng.random(spec.d) * (spec.edge_high - spec.edge_low)
        chunks.append(corner + rng.random((count, spec.d)) * edges)
        owners.append(np.full(count, cluster, dtype=np.intp))
        total += count
        cluster += 1
    data = Dataset.from_points(np.concatenate(chunks))
    assign = PeerAssignment(np.concatenate(owners), "true-cluster", cluster)
    return data, assign


def migrate_points(assign: PeerAssignment, p: float, rng_seed: int = 0) -> PeerAssignment:
    """Move each point with probability p% to a uniformly sampled peer
    (the source peer is a legal destination)."""
    if not (0.0 <= p <= 100.0):
        raise ValueError("p must be a percentage in [0, 100]")
    rng = rng_from_seed(rng_seed)
    m = assign.peer.size
    moves = rng.random(m) < (p / 100.0)
    destinations = rng.integers(0, assign.n_peers, size=m)
    peer = np.where(moves, destinations, assign.peer)
    return PeerAssignment(peer, assign.origin, assign.n_peers)


def peers_from_real(
    data: Dataset, n_peers: int, mode: str = "kpp", rng_seed: int = 0
) -> PeerAssignment:
    """Carve peers out of a real dataset via 1-NN cells of sampled centers.

    Centers come from biased seeding ("kpp") or uniform picks ("forgy");
    ties go to the lowest center index.
    """
    if not (1 <= n_peers <= data.m):
        raise ValueError("need 1 <= n_peers <= m")
    if mode == "kpp":
        centers = kmeanspp_seed(data, n_peers, seed=rng_seed).centers
        origin = "kpp-voronoi"
    elif mode == "forgy":
        rng = rng_from_seed(rng_seed)
        idx = rng.choice(data.m, size=n_peers, replace=False)
        centers = data.points[np.asarray(idx, dtype=np.intp)]
        origin = "forgy-voronoi"
    else:
        raise ValueError("mode must be 'kpp' or 'forgy'")
    peer = pairwise_sq_dists(data.points, centers).argmin(axis=1)
    return PeerAssignment(peer, origin, n_peers)


def load_dataset(path: Union[str, Path], fmt: str = "csv") -> Dataset:
    """Read comma-separated coordinate rows in order; a non-numeric first
    row is treated as a header and skipped."""
    if fmt != "csv":
        raise ValueError("only the csv format is supported")
    rows: list[list[float]] = []
    width: Optional[int] = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, cells in enumerate(reader):
            if not cells:
                continue
            try:
                values = [float(c) for c in cells]
            except ValueError:
                if lineno == 0:
                    continue  # header row
                raise ValueError(f"non-numeric cell on row {lineno + 1}") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ValueError(f"ragged row {lineno + 1}")
            rows.append(values)
    if not rows:
        raise ValueError(f"no data rows in {path}")
    return Dataset.from_points(np.array(rows))


def save_dataset(data: Dataset, path: Union[str, Path], fmt: str = "csv") -> None:
    """Write coordinate rows with round-trip-exact decimal formatting."""
    if fmt != "csv":
        raise ValueError("only the csv format is supported")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in data.points:
            writer.writerow([repr(float(v)) for v in row])
