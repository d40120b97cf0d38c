"""Trial runner, comparison metrics, bound calculators and the
log-sample-size regression."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import CenterSet, Dataset, potential
from .sampling import mix_seed

__all__ = [
    "TrialReport",
    "RegressionFit",
    "run_trials",
    "rho_phi",
    "rho_prime_phi",
    "fit_log_model",
    "BoundValue",
    "bound_report",
]

SeedingAlgorithm = Callable[[Dataset, int, int], CenterSet]


@dataclass(frozen=True)
class TrialReport:
    """Aggregate of repeated runs of one algorithm on one dataset."""

    algorithm_id: str
    dataset_id: str
    k: int
    trials: int
    mean_potential: float
    stdev: float
    potentials: tuple
    seeds: tuple
    bound_phi: Optional[float] = None
    bound_value: Optional[float] = None
    violations: Optional[int] = None

    def to_json_dict(self) -> dict:
        return {
            "algorithm_id": self.algorithm_id,
            "dataset_id": self.dataset_id,
            "k": self.k,
            "trials": self.trials,
            "mean_potential": self.mean_potential,
            "stdev": self.stdev,
            "bound_phi": self.bound_phi,
            "bound_value": self.bound_value,
            "violations": self.violations,
            "seeds": list(self.seeds),
            "potentials": list(self.potentials),
        }

    def to_csv_rows(self) -> list[dict]:
        return [
            {
                "algorithm_id": self.algorithm_id,
                "dataset_id": self.dataset_id,
                "k": self.k,
                "trial": i,
                "seed": seed,
                "potential": pot,
            }
            for i, (seed, pot) in enumerate(zip(self.seeds, self.potentials))
        ]


def run_trials(
    alg: SeedingAlgorithm,
    data: Dataset,
    k: int,
    trials: int,
    base_seed: int = 0,
    algorithm_id: str = "algorithm",
    dataset_id: str = "dataset",
    bound_phi: Optional[float] = None,
    jobs: int = 1,
) -> TrialReport:
    """Run `alg(data, k, seed)` under derived per-trial seeds and aggregate.

    Trial i runs with seed mix(base_seed, i); results reduce in trial order
    so reports are bit-reproducible whatever `jobs` is. When a bound
    composition value is supplied, runs exceeding (2 + ln k) * bound_phi are
    counted (never dropped).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seeds = [mix_seed(base_seed, i) for i in range(trials)]

    def one(i: int) -> float:
        try:
            centers = alg(data, k, seeds[i])
        except Exception as exc:
            raise RuntimeError(f"trial {i} failed: {exc}") from exc
        return potential(data, centers)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            potentials = list(pool.map(one, range(trials)))
    else:
        potentials = [one(i) for i in range(trials)]
    arr = np.array(potentials)
    bound_value = None
    violations = None
    if bound_phi is not None:
        bound_value = (2.0 + math.log(k)) * bound_phi
        violations = int(np.sum(arr > bound_value))
    return TrialReport(
        algorithm_id=algorithm_id,
        dataset_id=dataset_id,
        k=k,
        trials=trials,
        mean_potential=float(arr.mean()),
        stdev=float(arr.std(ddof=0)),
        potentials=tuple(float(v) for v in arr),
        seeds=tuple(seeds),
        bound_phi=bound_phi,
        bound_value=bound_value,
        violations=violations,
    )


def rho_phi(phi_dkm: float, phi_h: float) -> float:
    """Signed relative-increase percentage; negative means the distributed
    protocol beat the contender."""
    if phi_h <= 0:
        raise ValueError("contender potential must be positive")
    return (phi_dkm - phi_h) / phi_h * 100.0


def rho_prime_phi(phi_h: float, phi_kv: float) -> float:
    """Contender-over-pipeline potential ratio; above 1 favors the pipeline."""
    if phi_kv <= 0:
        raise ValueError("pipeline potential must be positive")
    return phi_h / phi_kv


@dataclass(frozen=True)
class RegressionFit:
    """Least-squares fit of y = a + b * ln(m)."""

    a: float
    b: float
    residual_rms: float


def fit_log_model(points: list) -> RegressionFit:
    """Fit effective-epsilon (or any response) against ln(sample size)."""
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    m = np.array([p[0] for p in points], dtype=np.float64)
    y = np.array([p[1] for p in points], dtype=np.float64)
    if np.unique(m).size < 2:
        raise ValueError("degenerate design: sample sizes must vary")
    x = np.log(m)
    xbar, ybar = x.mean(), y.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    b = float(np.sum((x - xbar) * (y - ybar)) / sxx)
    a = ybar - b * xbar
    resid = y - (a + b * x)
    return RegressionFit(a=a, b=b, residual_rms=float(np.sqrt(np.mean(resid**2))))


@dataclass(frozen=True)
class BoundValue:
    """A bound composition Phi and the full bound (2 + ln k) * Phi."""

    phi: float
    value: float


_REQUIRED = {
    "seeded": ("phi_opt", "phi_bias", "phi_variance", "eta"),
    "seeded-dirac": ("phi_opt",),
    "distributed-protected": ("phi_opt", "forgy_spread"),
    "distributed-private": ("phi_opt", "forgy_spread", "phi_variance"),
    "streaming": ("phi_opt", "probe_spread", "eta"),
    "online": ("phi_opt", "varsigma"),
    "dp-calibrated": ("phi_opt", "m", "r", "epsilon_tilde"),
    "dp-laplace": ("phi_opt", "m", "r", "epsilon"),
}


def bound_report(kind: str, k: int, **q) -> BoundValue:
    """Compose the bound value for one pipeline from measured quantities.

    Kinds: "seeded" (general bias+variance form), "seeded-dirac" (classical
    8*phi_opt retrieval), "distributed-protected"/"distributed-private",
    "streaming", "online", "dp-calibrated", "dp-laplace".
    """
    if kind not in _REQUIRED:
        raise ValueError(f"unknown bound kind {kind!r}")
    missing = [name for name in _REQUIRED[kind] if name not in q]
    if missing:
        raise ValueError(f"missing quantities for {kind}: {missing}")

    if kind == "seeded":
        phi = (
            (6.0 + 4.0 * q["eta"]) * q["phi_opt"]
            + 2.0 * q["phi_bias"]
            + 2.0 * q["phi_variance"]
        )
    elif kind == "seeded-dirac":
        phi = 8.0 * q["phi_opt"]
    elif kind == "distributed-protected":
        phi = 10.0 * q["phi_opt"] + 6.0 * q["forgy_spread"]
    elif kind == "distributed-private":
        phi = (
            10.0 * q["phi_opt"]
            + 4.0 * q["forgy_spread"]
            + 2.0 * q["phi_variance"]
        )
    elif kind == "streaming":
        phi = (8.0 + 4.0 * q["eta"]) * q["phi_opt"] + 2.0 * q["probe_spread"]
    elif kind == "online":
        if q["varsigma"] <= 0:
            raise ValueError("varsigma must be positive")
        phi = (4.0 + 32.0 / q["varsigma"] ** 2) * q["phi_opt"]
    elif kind == "dp-calibrated":
        phi = 8.0 * (q["phi_opt"] + q["m"] * q["r"] ** 2 / q["epsilon_tilde"] ** 2)
    else:  # dp-laplace
        phi = 8.0 * (
            q["phi_opt"] + q["m"] * k * k * q["r"] ** 2 / q["epsilon"] ** 2
        )
    return BoundValue(phi=phi, value=(2.0 + math.log(k)) * phi)
