"""Peer protocol simulation: data-holding nodes that only do uniform local
picks, a compute-only aggregator that never touches a data point, a message
ledger enforcing that rule, and the oversampling baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .densities import LocalDensity
from .geometry import (
    CenterProvenance,
    CenterSet,
    Dataset,
    centroid,
    pairwise_sq_dists,
    potential,
)
from .sampling import categorical, mix_seed, rng_from_seed
from .seeding import kmeanspp_seed

__all__ = [
    "SPECIAL_NODE",
    "LedgerViolation",
    "MessageEvent",
    "MessageLog",
    "ForgyNode",
    "PeerNetwork",
    "dkmeans_protected",
    "dkmeans_private",
    "forgy_spread",
    "kmeans_parallel_baseline",
]

SPECIAL_NODE = -1  # aggregator id in ledger records


class LedgerViolation(RuntimeError):
    """A data point was routed to the aggregator node."""


@dataclass(frozen=True)
class MessageEvent:
    iteration: int
    round: int  # 1 = ask, 2 = center broadcast, 3 = scalar totals
    src: int
    dst: int
    payload: str  # "control" | "point" | "scalar"


@dataclass
class MessageLog:
    """Counters plus the flat event record of every message sent."""

    events: list = field(default_factory=list)
    round_counts: dict = field(default_factory=lambda: {1: 0, 2: 0, 3: 0})
    data_points_shared: int = 0
    scalars_shared: int = 0

    def add(self, iteration: int, round: int, src: int, dst: int, payload: str) -> None:
        if dst == SPECIAL_NODE and payload == "point":
            raise LedgerViolation("data point routed to the aggregator node")
        self.events.append(MessageEvent(iteration, round, src, dst, payload))
        self.round_counts[round] += 1
        if payload == "scalar":
            self.scalars_shared += 1

    def note_point_shared(self) -> None:
        # one shared data value per broadcast, however many copies travel
        self.data_points_shared += 1

    @property
    def total_messages(self) -> int:
        return len(self.events)

    def all_pairs_broadcast_messages(self, n_nodes: int) -> int:
        """Broadcasts counted under the all-pairs O(n^2 k) interpretation."""
        return self.data_points_shared * n_nodes * n_nodes

    def to_records(self) -> list[dict]:
        return [
            {
                "iteration": e.iteration,
                "round": e.round,
                "src": e.src,
                "dst": e.dst,
                "payload": e.payload,
            }
            for e in self.events
        ]


@dataclass
class ForgyNode:
    """One data-holding peer: its slice of the data and its local cache of
    current per-point distances to the closest broadcast center."""

    id: int
    indices: np.ndarray  # global indices into the union dataset
    points: np.ndarray
    weights: np.ndarray
    d_cache: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def update_cache(self, center: np.ndarray) -> float:
        dist = pairwise_sq_dists(self.points, center[None, :])[:, 0]
        if self.d_cache is None:
            self.d_cache = dist
        else:
            np.minimum(self.d_cache, dist, out=self.d_cache)
        return float(np.dot(self.weights, self.d_cache))


class PeerNetwork:
    """Partition of a dataset into peers plus the aggregator state."""

    def __init__(self, data: Dataset, nodes: list, ledger: Optional[MessageLog] = None):
        if not nodes:
            raise ValueError("network needs at least one node")
        sizes = sum(node.size for node in nodes)
        seen = np.concatenate([node.indices for node in nodes])
        if sizes != data.m or np.unique(seen).size != data.m:
            raise ValueError("node datasets must partition the union dataset")
        self.data = data
        self.nodes = nodes
        self.totals = np.zeros(len(nodes))
        self.ledger = ledger if ledger is not None else MessageLog()

    @classmethod
    def from_assignment(cls, data: Dataset, assignment: np.ndarray) -> "PeerNetwork":
        """Build nodes from a per-point peer id array; empty ids compact away."""
        assignment = np.asarray(assignment, dtype=np.intp)
        if assignment.shape != (data.m,):
            raise ValueError("assignment must give one peer per point")
        nodes = []
        for nid, peer in enumerate(np.unique(assignment)):
            idx = np.flatnonzero(assignment == peer)
            nodes.append(
                ForgyNode(nid, idx, data.points[idx], data.weights[idx])
            )
        return cls(data, nodes)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def node_pick_weights(self, t: int) -> np.ndarray:
        """Aggregator-side node weights: uniform first, cache totals after."""
        if t == 1:
            return np.ones(self.n)
        if float(self.totals.sum()) <= 0.0:
            return np.array([float(node.size) for node in self.nodes])
        return self.totals.copy()


def _dkmeans(
    net: PeerNetwork,
    k: int,
    rng_seed: int,
    template: Optional[LocalDensity],
) -> CenterSet:
    if k < 1:
        raise ValueError("k must be >= 1")
    for node in net.nodes:
        if node.size == 0:
            raise ValueError("empty node")
        node.d_cache = None
    net.totals = np.zeros(net.n)

    rng = rng_from_seed(rng_seed)
    ledger = net.ledger
    centers: list[np.ndarray] = []
    prov: list[CenterProvenance] = []

    for t in range(1, k + 1):
        i_star = categorical(rng, net.node_pick_weights(t))
        ledger.add(t, 1, SPECIAL_NODE, i_star, "control")

        node = net.nodes[i_star]
        local = categorical(rng, np.ones(node.size))
        reference = node.points[local]
        if template is None:
            center = reference
            noisy = False
        else:
            center = np.asarray(template.reanchor(reference).sample(rng), float)
            noisy = template.kind != "dirac"

        ledger.note_point_shared()
        for j in range(net.n):
            if j != i_star:
                ledger.add(t, 2, i_star, j, "point")

        for j, peer in enumerate(net.nodes):
            net.totals[j] = peer.update_cache(center)
            ledger.add(t, 3, j, SPECIAL_NODE, "scalar")

        centers.append(center)
        prov.append(
            CenterProvenance(
                iteration=t,
                source=f"peer:{i_star}",
                reference=int(node.indices[local]),
                noisy=noisy,
            )
        )
    return CenterSet(np.stack(centers), tuple(prov))


def dkmeans_protected(net: PeerNetwork, k: int, rng_seed: int = 0) -> CenterSet:
    """k rounds of pick-node / uniform-local-pick / broadcast / cache-update.

    Exactly k data points are shared per run and the aggregator only ever
    receives scalars (the ledger hard-faults otherwise).
    """
    return _dkmeans(net, k, rng_seed, template=None)


def dkmeans_private(
    net: PeerNetwork, k: int, density_template: LocalDensity, rng_seed: int = 0
) -> CenterSet:
    """Protected protocol with the broadcast point replaced by a noisy
    sample of the template density re-centered at the local pick."""
    return _dkmeans(net, k, rng_seed, template=density_template)


def forgy_spread(net: PeerNetwork) -> float:
    """Total within-node potential to the node centroids."""
    out = 0.0
    for node in net.nodes:
        sub = Dataset(node.points, node.weights)
        c = centroid(sub)
        out += float(np.dot(sub.weights, pairwise_sq_dists(sub.points, c[None, :])[:, 0]))
    return out


def kmeans_parallel_baseline(data: Dataset, k: int, rng_seed: int = 0) -> CenterSet:
    """Oversampling baseline: ceil(ln phi_1) rounds of independent inclusion
    with ell = 2k, then a weighted reclustering of the candidates.

    Degenerate rounds (zero potential, too few candidates) fall back to
    uniform top-up so the baseline always returns k centers.
    """
    if data.m < k:
        raise ValueError("need m >= k")
    rng = rng_from_seed(rng_seed)
    ell = 2 * k

    first = categorical(rng, data.weights)
    candidate_idx = [first]
    candidate_set = {first}
    current = data.points[first][None, :]

    phi1 = potential(data, current)
    rounds = max(1, math.ceil(math.log(phi1))) if phi1 > 1.0 else 1

    for _ in range(rounds):
        dmin = pairwise_sq_dists(data.points, current).min(axis=1)
        phi = float(np.dot(data.weights, dmin))
        if phi <= 0.0:
            break
        p_incl = np.minimum(1.0, ell * data.weights * dmin / phi)
        drawn = np.flatnonzero(rng.random(data.m) < p_incl)
        fresh = [int(i) for i in drawn if int(i) not in candidate_set]
        if fresh:
            candidate_idx.extend(fresh)
            candidate_set.update(fresh)
            current = data.points[np.array(candidate_idx, dtype=np.intp)]

    cand = np.array(sorted(candidate_set), dtype=np.intp)
    counts = _voronoi_counts(data, cand)
    live = counts > 0.0
    cand, counts = cand[live], counts[live]

    if cand.size < k:  # top up with uniform picks over the leftovers
        leftovers = np.setdiff1d(np.arange(data.m), cand)
        extra = rng.choice(leftovers, size=k - cand.size, replace=False)
        cand = np.concatenate([cand, np.asarray(extra, dtype=np.intp)])
        counts = _voronoi_counts(data, cand)
        cand, counts = cand[counts > 0.0], counts[counts > 0.0]

    weighted = Dataset(data.points[cand], counts)
    reclustered = kmeanspp_seed(weighted, k, seed=mix_seed(rng_seed, 1))
    prov = tuple(
        CenterProvenance(
            iteration=p.iteration,
            source=f"oversample:{int(cand[p.reference])}",
            reference=int(cand[p.reference]),
        )
        for p in reclustered.provenance
    )
    return CenterSet(reclustered.centers, prov)


def _voronoi_counts(data: Dataset, candidate_idx: np.ndarray) -> np.ndarray:
    assign = pairwise_sq_dists(data.points, data.points[candidate_idx]).argmin(axis=1)
    counts = np.zeros(candidate_idx.size)
    np.add.at(counts, assign, data.weights)
    return counts
