"""Request/response schemas of the seeding service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator


class PointsRequest(BaseModel):
    """Base payload: inline coordinate rows plus optional weights."""

    points: list[list[float]] = Field(min_length=1)
    weights: Optional[list[float]] = None

    @field_validator("points")
    @classmethod
    def _rectangular(cls, v: list[list[float]]) -> list[list[float]]:
        width = len(v[0])
        if width == 0 or any(len(row) != width for row in v):
            raise ValueError("points must form a nonempty rectangular table")
        return v


class ProvenanceModel(BaseModel):
    iteration: int
    source: str
    reference: int
    noisy: bool


class CentersResponse(BaseModel):
    centers: list[list[float]]
    provenance: list[ProvenanceModel]
    potential: float


class SeedRequest(PointsRequest):
    k: int = Field(ge=1)
    seed: int = 0
    lloyd_iters: int = Field(default=0, ge=0)


class DkmRequest(PointsRequest):
    k: int = Field(ge=1)
    peers: Optional[list[int]] = None  # explicit per-point peer ids
    n_peers: Optional[int] = Field(default=None, ge=1)  # or build this many
    peers_mode: Literal["kpp", "forgy"] = "kpp"
    seed: int = 0
    private: bool = False
    noise_scale: Optional[float] = Field(default=None, gt=0)


class LedgerModel(BaseModel):
    round_counts: dict[int, int]
    data_points_shared: int
    scalars_shared: int
    total_messages: int
    all_pairs_broadcast_messages: int
    events: list[dict]


class DkmResponse(CentersResponse):
    forgy_spread: float
    n_peers: int
    ledger: LedgerModel


class SkmRequest(PointsRequest):
    k: int = Field(ge=1)
    n: int = Field(ge=1)
    builder: Literal["online", "uniform"] = "online"
    seed: int = 0


class SkmResponse(CentersResponse):
    synopsis_points: list[list[float]]
    synopsis_counts: list[float]
    probe_spread: float


class OkmRequest(PointsRequest):
    k: int = Field(ge=1)
    batch: Optional[int] = Field(default=None, ge=1)
    seed: int = 0


class DpRequest(PointsRequest):
    k: int = Field(ge=2)
    epsilon: float = Field(gt=0)
    mode: Literal["calibrated", "laplace"] = "calibrated"
    estimator: Literal["randomized", "exact"] = "randomized"
    nest: int = Field(default=5000, ge=1)
    seed: int = 0


class SpreadRecord(BaseModel):
    delta_w: float
    delta_s: float
    R_l1: float
    R_l2_diam: float
    k: int
    method: str
    n_est: Optional[int]
    epsilon: Optional[float] = None
    epsilon_tilde: Optional[float] = None
    sigma1: Optional[float] = None
    sigma2: Optional[float] = None


class DpResponse(CentersResponse):
    sigma: float
    mode_requested: str
    mode_used: str
    epsilon_tilde: Optional[float]
    phi1_noise_term: Optional[float]
    phi2_noise_term: float
    spread: SpreadRecord


class EstimateRequest(PointsRequest):
    k: int = Field(ge=2)
    nest: int = Field(default=5000, ge=1)
    estimator: Literal["randomized", "exact"] = "randomized"
    epsilon: Optional[float] = Field(default=None, gt=0)
    seed: int = 0


class BaselineRequest(PointsRequest):
    k: int = Field(ge=1)
    algorithm: Literal["fdp", "gupt", "kmeans-parallel"]
    epsilon: Optional[float] = Field(default=None, gt=0)
    seed: int = 0


class BaselineResponse(CentersResponse):
    algorithm: str
    params: dict


class GenRequest(BaseModel):
    d: int = Field(ge=1)
    target_m: int = Field(default=20000, ge=1)
    max_points_per_cluster: int = Field(default=1000, ge=1)
    p: float = Field(default=0.0, ge=0.0, le=100.0)
    seed: int = 0


class GenResponse(BaseModel):
    points: list[list[float]]
    peer: list[int]
    n_peers: int
    manifest: dict  # name, d, m


class BenchRequest(PointsRequest):
    k: int = Field(ge=1)
    algorithm: Literal["kmeanspp", "kvariates", "dkm", "skm", "okm", "fdp", "gupt", "kmeans-parallel"]
    trials: int = Field(default=10, ge=1)
    seed: int = 0
    epsilon: Optional[float] = Field(default=None, gt=0)
    peers: Optional[list[int]] = None
    n_peers: Optional[int] = Field(default=None, ge=1)
    n: Optional[int] = Field(default=None, ge=1)
    batch: Optional[int] = Field(default=None, ge=1)
    jobs: int = Field(default=1, ge=1)


class BenchResponse(BaseModel):
    algorithm_id: str
    dataset_id: str
    k: int
    trials: int
    mean_potential: float
    stdev: float
    bound_phi: Optional[float]
    bound_value: Optional[float]
    violations: Optional[int]
    seeds: list[int]
    potentials: list[float]


class HealthResponse(BaseModel):
    status: str
    version: str
