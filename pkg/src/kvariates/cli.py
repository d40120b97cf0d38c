"""Thin command-line client of the seeding service.

Every subcommand reads local files, builds one request, sends it to the
service (in-process by default, or a remote base URL via --server) and
writes the JSON/CSV response to --out. Same argv plus same files gives a
byte-identical primary output. Exit codes: 0 success, 2 usage error,
1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional

from .datagen import load_dataset

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kvariates",
        description="Biased-seeding clustering pipelines over a local or remote service.",
    )
    parser.add_argument("--server", default=None, help="service base URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, data: bool = True) -> None:
        if data:
            p.add_argument("--data", required=True, help="input CSV of coordinate rows")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("seed", help="classical biased seeding")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--lloyd", type=int, default=0, help="refinement iterations")

    p = sub.add_parser("dkm", help="peer-distributed seeding")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--peers", required=True,
                   help="peer count (int) or path to a per-point peer-id file")
    p.add_argument("--private", action="store_true")
    p.add_argument("--noise-scale", type=float, default=None)

    p = sub.add_parser("skm", help="stream seeding over synopses")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True, help="synopsis capacity")
    p.add_argument("--builder", choices=("online", "uniform"), default="online")

    p = sub.add_parser("okm", help="online one-center-per-minibatch seeding")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--batch", type=int, default=None)

    p = sub.add_parser("dp", help="differentially private seeding")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--mode", choices=("calibrated", "laplace"), default="calibrated")
    p.add_argument("--nest", type=int, default=5000)
    p.add_argument("--estimator", choices=("randomized", "exact"), default="randomized")

    p = sub.add_parser("estimate", help="spread/monotonicity constants report")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--nest", type=int, default=5000)
    p.add_argument("--estimator", choices=("randomized", "exact"), default="randomized")
    p.add_argument("--epsilon", type=float, default=None)

    p = sub.add_parser("baseline", help="comparison baselines")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--algorithm", choices=("fdp", "gupt", "kmeans-parallel"), required=True)
    p.add_argument("--epsilon", type=float, default=None)

    p = sub.add_parser("gen", help="synthetic hyperrectangle clusters")
    common(p, data=False)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--target-m", type=int, default=20000)
    p.add_argument("--p", type=float, default=0.0, help="migration percentage")

    p = sub.add_parser("bench", help="trial runner")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--algorithm", required=True,
                   choices=("kmeanspp", "kvariates", "dkm", "skm", "okm",
                            "fdp", "gupt", "kmeans-parallel"))
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--peers", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


class _Client:
    """Requests either a remote base URL or the in-process app."""

    def __init__(self, server: Optional[str]):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # the environment's starlette build warns (UserWarning
                # subclass) on importing its test client; irrelevant here
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code >= 300:
            try:
                detail = response.json().get("detail", response.text)
            except Exception:
                detail = response.text
            raise RuntimeError(f"{path} failed ({response.status_code}): {detail}")
        return response.json()


def _points_payload(args) -> dict:
    data = load_dataset(args.data)
    return {"points": data.points.tolist(), "weights": None}


def _read_peers(value: str) -> tuple[Optional[list[int]], Optional[int]]:
    """--peers is a count when it parses as int, else a per-point id file."""
    try:
        return None, int(value)
    except ValueError:
        pass
    ids = []
    with open(value) as fh:
        for line in fh:
            line = line.strip().split(",")[0]
            if line:
                ids.append(int(float(line)))
    return ids, None


def _centers_csv(result: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    for row in result["centers"]:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _flat_csv(record: dict) -> str:
    buf = io.StringIO()
    keys = sorted(record)
    writer = csv.DictWriter(buf, fieldnames=keys)
    writer.writeheader()
    writer.writerow({k: record[k] for k in keys})
    return buf.getvalue()


def _bench_csv(result: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["algorithm_id", "dataset_id", "k", "trial", "seed", "potential"])
    for i, (seed, pot) in enumerate(zip(result["seeds"], result["potentials"])):
        writer.writerow([result["algorithm_id"], result["dataset_id"],
                         result["k"], i, seed, repr(float(pot))])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _run(args) -> int:
    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK

    client = _Client(args.server)

    if args.command == "gen":
        result = client.post("/gen", {
            "d": args.d, "target_m": args.target_m, "p": args.p, "seed": args.seed,
        })
        if args.out is not None:
            result["manifest"]["path"] = str(args.out)
        if args.format == "json":
            _emit(_json_text(result), args.out)
        else:
            buf = io.StringIO()
            writer = csv.writer(buf)
            for row in result["points"]:
                writer.writerow([repr(float(v)) for v in row])
            _emit(buf.getvalue(), args.out)
            if args.out is not None:
                peers_path = Path(args.out).with_suffix(".peers.csv")
                peers_path.write_text(
                    "\n".join(str(p) for p in result["peer"]) + "\n"
                )
        return EXIT_OK

    payload = _points_payload(args)
    if args.command == "seed":
        payload.update({"k": args.k, "seed": args.seed, "lloyd_iters": args.lloyd})
        result = client.post("/seed", payload)
        text = _json_text(result) if args.format == "json" else _centers_csv(result)
    elif args.command == "dkm":
        peers, n_peers = _read_peers(args.peers)
        payload.update({
            "k": args.k, "seed": args.seed, "peers": peers, "n_peers": n_peers,
            "private": args.private, "noise_scale": args.noise_scale,
        })
        result = client.post("/dkm", payload)
        text = _json_text(result) if args.format == "json" else _centers_csv(result)
    elif args.command == "skm":
        payload.update({"k": args.k, "n": args.n, "builder": args.builder, "seed": args.seed})
        result = client.post("/skm", payload)
        text = _json_text(result) if args.format == "json" else _centers_csv(result)
    elif args.command == "okm":
        payload.update({"k": args.k, "batch": args.batch, "seed": args.seed})
        result = client.post("/okm", payload)
        text = _json_text(result) if args.format == "json" else _centers_csv(result)
    elif args.command == "dp":
        payload.update({
            "k": args.k, "epsilon": args.epsilon, "mode": args.mode,
            "nest": args.nest, "estimator": args.estimator, "seed": args.seed,
        })
        result = client.post("/dp", payload)
        text = _json_text(result) if args.format == "json" else _centers_csv(result)
    elif args.command == "estimate":
        payload.update({
            "k": args.k, "nest": args.nest, "estimator": args.estimator,
            "epsilon": args.epsilon, "seed": args.seed,
        })
        result = client.post("/estimate", payload)
        text = _json_text(result) if args.format == "json" else _flat_csv(result)
    elif args.command == "baseline":
        payload.update({
            "k": args.k, "algorithm": args.algorithm,
            "epsilon": args.epsilon, "seed": args.seed,
        })
        result = client.post("/baseline", payload)
        text = _json_text(result) if args.format == "json" else _centers_csv(result)
    else:  # bench
        peers, n_peers = (None, None)
        if args.peers is not None:
            peers, n_peers = _read_peers(args.peers)
        payload.update({
            "k": args.k, "algorithm": args.algorithm, "trials": args.trials,
            "seed": args.seed, "epsilon": args.epsilon, "peers": peers,
            "n_peers": n_peers, "n": args.n, "batch": args.batch, "jobs": args.jobs,
        })
        result = client.post("/bench", payload)
        text = _json_text(result) if args.format == "json" else _bench_csv(result)

    _emit(text, args.out)
    return EXIT_OK


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except (RuntimeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
