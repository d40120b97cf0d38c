"""HTTP surface: one endpoint per pipeline, every response JSON-stable."""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..bench import run_trials
from ..datagen import (
    HyperrectClusterSpec,
    gen_hyperrect_clusters,
    migrate_points,
    peers_from_real,
)
from ..densities import LocalDensity
from ..distributed import (
    LedgerViolation,
    PeerNetwork,
    dkmeans_private,
    dkmeans_protected,
    forgy_spread,
    kmeans_parallel_baseline,
)
from ..geometry import CenterSet, Dataset, enclosing_radius, potential
from ..privacy import (
    CalibrationUndefined,
    DpConfig,
    _block_count,
    compute_spread_report,
    dp_kvariates,
    forgy_dp_baseline,
    gupt_style_baseline,
)
from ..sampling import mix_seed
from ..seeding import kmeanspp_seed, lloyd_refine
from ..streaming import (
    MinibatchStream,
    build_synopses_online,
    build_synopses_uniform,
    okmeans_run,
    probe_spread,
    skmeans,
)
from .models import (
    BaselineRequest,
    BaselineResponse,
    BenchRequest,
    BenchResponse,
    CentersResponse,
    DkmRequest,
    DkmResponse,
    DpRequest,
    DpResponse,
    EstimateRequest,
    GenRequest,
    GenResponse,
    HealthResponse,
    LedgerModel,
    OkmRequest,
    ProvenanceModel,
    SeedRequest,
    SkmRequest,
    SkmResponse,
    SpreadRecord,
)


def _dataset(req) -> Dataset:
    try:
        return Dataset.from_points(np.array(req.points), req.weights)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _centers_payload(data: Dataset, centers: CenterSet) -> dict:
    return {
        "centers": centers.centers.tolist(),
        "provenance": [
            ProvenanceModel(
                iteration=p.iteration,
                source=p.source,
                reference=p.reference,
                noisy=p.noisy,
            )
            for p in centers.provenance
        ],
        "potential": potential(data, centers),
    }


def create_app() -> FastAPI:
    app = FastAPI(title="kvariates", version=__version__)

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/seed", response_model=CentersResponse)
    def seed(req: SeedRequest) -> CentersResponse:
        data = _dataset(req)
        try:
            centers = kmeanspp_seed(data, req.k, seed=req.seed)
            if req.lloyd_iters:
                centers = lloyd_refine(data, centers, iters=req.lloyd_iters)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return CentersResponse(**_centers_payload(data, centers))

    @app.post("/dkm", response_model=DkmResponse)
    def dkm(req: DkmRequest) -> DkmResponse:
        data = _dataset(req)
        try:
            assignment = _peer_assignment(req, data)
            net = PeerNetwork.from_assignment(data, assignment)
            if req.private:
                if req.noise_scale is None:
                    raise HTTPException(
                        status_code=400,
                        detail="private runs need a noise_scale (per-coordinate Laplace scale)",
                    )
                template = LocalDensity.product_laplace(
                    np.zeros(data.d), req.noise_scale
                )
                centers = dkmeans_private(net, req.k, template, rng_seed=req.seed)
            else:
                centers = dkmeans_protected(net, req.k, rng_seed=req.seed)
        except LedgerViolation as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        ledger = net.ledger
        return DkmResponse(
            **_centers_payload(data, centers),
            forgy_spread=forgy_spread(net),
            n_peers=net.n,
            ledger=LedgerModel(
                round_counts=ledger.round_counts,
                data_points_shared=ledger.data_points_shared,
                scalars_shared=ledger.scalars_shared,
                total_messages=ledger.total_messages,
                all_pairs_broadcast_messages=ledger.all_pairs_broadcast_messages(net.n),
                events=ledger.to_records(),
            ),
        )

    @app.post("/skm", response_model=SkmResponse)
    def skm(req: SkmRequest) -> SkmResponse:
        data = _dataset(req)
        try:
            centers = skmeans(
                data, req.n, req.k, builder=req.builder, rng_seed=req.seed
            )
            if req.builder == "online":
                synopses = build_synopses_online(data, req.n)
            else:
                synopses = build_synopses_uniform(
                    data, req.n, rng_seed=mix_seed(req.seed, 1)
                )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return SkmResponse(
            **_centers_payload(data, centers),
            synopsis_points=synopses.points.tolist(),
            synopsis_counts=synopses.counts.tolist(),
            probe_spread=probe_spread(data, synopses),
        )

    @app.post("/okm", response_model=CentersResponse)
    def okm(req: OkmRequest) -> CentersResponse:
        data = _dataset(req)
        try:
            stream = MinibatchStream.fixed_size(data, req.k, batch_size=req.batch)
            centers = okmeans_run(stream, req.k, rng_seed=req.seed)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return CentersResponse(**_centers_payload(data, centers))

    @app.post("/dp", response_model=DpResponse)
    def dp(req: DpRequest) -> DpResponse:
        data = _dataset(req)
        try:
            spread = compute_spread_report(
                data, req.k, method=req.estimator, n_est=req.nest, rng_seed=req.seed
            )
            result = dp_kvariates(
                data,
                req.k,
                DpConfig(epsilon=req.epsilon, mode=req.mode, k=req.k),
                spread,
                rng_seed=req.seed,
            )
        except CalibrationUndefined as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return DpResponse(
            **_centers_payload(data, result.centers),
            sigma=result.sigma,
            mode_requested=result.mode_requested,
            mode_used=result.mode_used,
            epsilon_tilde=result.epsilon_tilde,
            phi1_noise_term=result.phi1_noise_term,
            phi2_noise_term=result.phi2_noise_term,
            spread=SpreadRecord(**spread.to_record(req.epsilon)),
        )

    @app.post("/estimate", response_model=SpreadRecord)
    def estimate(req: EstimateRequest) -> SpreadRecord:
        data = _dataset(req)
        try:
            spread = compute_spread_report(
                data, req.k, method=req.estimator, n_est=req.nest, rng_seed=req.seed
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return SpreadRecord(**spread.to_record(req.epsilon))

    @app.post("/baseline", response_model=BaselineResponse)
    def baseline(req: BaselineRequest) -> BaselineResponse:
        data = _dataset(req)
        params: dict = {}
        try:
            if req.algorithm == "kmeans-parallel":
                centers = kmeans_parallel_baseline(data, req.k, rng_seed=req.seed)
                params = {"ell": 2 * req.k}
            else:
                if req.epsilon is None:
                    raise HTTPException(
                        status_code=400, detail="noisy baselines need --epsilon"
                    )
                r = enclosing_radius(data, "l1")
                if req.algorithm == "fdp":
                    centers = forgy_dp_baseline(
                        data, req.k, req.epsilon, r, rng_seed=req.seed
                    )
                    params = {"r_l1": r}
                else:
                    centers = gupt_style_baseline(
                        data, req.k, req.epsilon, r, rng_seed=req.seed
                    )
                    params = {"r_l1": r, "ell": _block_count(data.m)}
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return BaselineResponse(
            **_centers_payload(data, centers),
            algorithm=req.algorithm,
            params=params,
        )

    @app.post("/gen", response_model=GenResponse)
    def gen(req: GenRequest) -> GenResponse:
        spec = HyperrectClusterSpec(
            d=req.d,
            target_m=req.target_m,
            max_points_per_cluster=req.max_points_per_cluster,
            rng_seed=req.seed,
        )
        data, assign = gen_hyperrect_clusters(spec)
        if req.p > 0:
            assign = migrate_points(assign, req.p, rng_seed=req.seed + 1)
        return GenResponse(
            points=data.points.tolist(),
            peer=assign.peer.tolist(),
            n_peers=assign.n_peers,
            manifest={
                "name": f"hyperrect-d{req.d}-seed{req.seed}",
                "path": None,  # filled in by clients that persist the data
                "d": data.d,
                "m": data.m,
            },
        )

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest) -> BenchResponse:
        data = _dataset(req)
        alg = _bench_algorithm(req, data)
        try:
            report = run_trials(
                alg,
                data,
                req.k,
                trials=req.trials,
                base_seed=req.seed,
                algorithm_id=req.algorithm,
                dataset_id="inline",
                jobs=req.jobs,
            )
        except (RuntimeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return BenchResponse(**report.to_json_dict())

    return app


def _peer_assignment(req: DkmRequest, data: Dataset) -> np.ndarray:
    if req.peers is not None:
        if len(req.peers) != data.m:
            raise HTTPException(
                status_code=400, detail="one peer id per point required"
            )
        return np.array(req.peers)
    if req.n_peers is None:
        raise HTTPException(
            status_code=400, detail="give either peers or n_peers"
        )
    return peers_from_real(data, req.n_peers, mode=req.peers_mode, rng_seed=req.seed).peer


def _bench_algorithm(req: BenchRequest, data: Dataset):
    """Resolve the benched algorithm to a (data, k, seed) callable."""
    if req.algorithm == "kmeanspp" or req.algorithm == "kvariates":
        return lambda d, k, s: kmeanspp_seed(d, k, seed=s)
    if req.algorithm == "dkm":
        if req.peers is not None and len(req.peers) == data.m:
            peers = np.array(req.peers)
        elif req.n_peers is not None:
            peers = peers_from_real(data, req.n_peers, rng_seed=req.seed).peer
        else:
            raise HTTPException(status_code=400, detail="dkm bench needs peers")

        def run_dkm(d, k, s):
            net = PeerNetwork.from_assignment(d, peers)
            return dkmeans_protected(net, k, rng_seed=s)

        return run_dkm
    if req.algorithm == "skm":
        n = req.n if req.n is not None else max(req.k, data.m // 10)
        return lambda d, k, s: skmeans(d, n, k, rng_seed=s)
    if req.algorithm == "okm":
        return lambda d, k, s: okmeans_run(
            MinibatchStream.fixed_size(d, k, batch_size=req.batch), k, rng_seed=s
        )
    if req.algorithm in ("fdp", "gupt"):
        if req.epsilon is None:
            raise HTTPException(status_code=400, detail="noisy baselines need epsilon")
        radius = enclosing_radius(data, "l1")
        if req.algorithm == "fdp":
            return lambda d, k, s: forgy_dp_baseline(d, k, req.epsilon, radius, rng_seed=s)
        return lambda d, k, s: gupt_style_baseline(d, k, req.epsilon, radius, rng_seed=s)
    return lambda d, k, s: kmeans_parallel_baseline(d, k, rng_seed=s)


app = create_app()
