"""Spread/monotonicity estimation, noise calibration, the Laplace-noised
seeding pipeline, the exact output-likelihood oracle, likelihood-ratio
bounds, and the two noisy baselines it is compared against."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .densities import LocalDensity, product_laplace_densities
from .geometry import (
    CenterProvenance,
    CenterSet,
    Dataset,
    centroid,
    enclosing_radius,
    pairwise_sq_dists,
)
from .sampling import categorical, mix_seed, rng_from_seed
from .seeding import SeedingConfig, kmeanspp_seed, kvariates_seed, lloyd_refine

__all__ = [
    "CalibrationUndefined",
    "SpreadReport",
    "DpConfig",
    "DpSeedResult",
    "delta_w_exact",
    "delta_w_randomized",
    "delta_s_exact",
    "delta_s_randomized",
    "n_packed_check",
    "branching_factor",
    "epsilon_tilde",
    "compute_spread_report",
    "dp_kvariates",
    "likelihood_exact",
    "lr_bound_rhs",
    "laplace_ratio_bound",
    "SampledRegimeReport",
    "sampled_regime_report",
    "forgy_dp_baseline",
    "gupt_style_baseline",
]

DELTA_W_EXACT_MAX_POINTS = 12
DELTA_S_EXACT_MAX_POINTS = 10
LIKELIHOOD_MAX_POINTS = 7
LIKELIHOOD_MAX_K = 3


class CalibrationUndefined(RuntimeError):
    """Raised when the calibrated noise scale does not exist for the inputs."""


@dataclass(frozen=True)
class SpreadReport:
    """(delta_w, delta_s, radii) bundle feeding calibration and bound checks.

    The L1 enclosing radius is the one noise calibration uses; the L2
    diameter is the one inside the spread definition. Both are kept to
    prevent mixups.
    """

    delta_w: float
    delta_s: float
    r_l1: float
    r_l2_diam: float
    k: int
    method: str  # "exact" | "randomized"
    n_est: Optional[int] = None

    def to_record(self, epsilon: Optional[float] = None) -> dict:
        rec = {
            "delta_w": self.delta_w,
            "delta_s": self.delta_s,
            "R_l1": self.r_l1,
            "R_l2_diam": self.r_l2_diam,
            "k": self.k,
            "method": self.method,
            "n_est": self.n_est,
            "epsilon": epsilon,
            "epsilon_tilde": None,
            "sigma1": None,
            "sigma2": None,
        }
        if epsilon is not None:
            et = epsilon_tilde(epsilon, self.delta_w, self.delta_s, self.k)
            rec["epsilon_tilde"] = et
            if et is not None and et > 0:
                rec["sigma1"] = 2.0 * math.sqrt(2.0) * self.r_l1 / et
            rec["sigma2"] = 2.0 * math.sqrt(2.0) * self.k * self.r_l1 / epsilon
        return rec


@dataclass(frozen=True)
class DpConfig:
    """Privacy budget and which noise scale to calibrate with."""

    epsilon: float
    mode: str  # "calibrated" | "laplace"
    k: int
    r: Optional[float] = None  # L1 radius; defaults to the spread report's

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.mode not in ("calibrated", "laplace"):
            raise ValueError("mode must be 'calibrated' or 'laplace'")
        if self.k < 1:
            raise ValueError("k must be >= 1")


def _nn_sq_to_members(data: Dataset, member_idx: np.ndarray) -> np.ndarray:
    return pairwise_sq_dists(data.points, data.points[member_idx]).min(axis=1)


def delta_w_exact(data: Dataset, k: int, r_l2: Optional[float] = None) -> float:
    """Exact spread constant by full enumeration of (N, B) pairs.

    N ranges over all (k-1)-subsets, B over all drop-one subsets; the
    constant is the squared L2 diameter over the smallest residual sum.
    All-identical data makes the minimum zero and the constant infinite
    (reported as inf).
    """
    m = data.m
    if m > DELTA_W_EXACT_MAX_POINTS:
        raise ValueError(f"exact enumeration guarded at m <= {DELTA_W_EXACT_MAX_POINTS}")
    if not (2 <= k <= m):
        raise ValueError("need 2 <= k <= m")
    r = enclosing_radius(data, "l2") if r_l2 is None else r_l2
    best = math.inf
    for combo in itertools.combinations(range(m), k - 1):
        d = _nn_sq_to_members(data, np.array(combo, dtype=np.intp))
        contrib = data.weights * d
        total = float(contrib.sum())
        best = min(best, total - float(contrib.max()))
    if best <= 0.0:
        return math.inf
    return r * r / best


def _draw_delta_w_trials(
    rng: np.random.Generator, m: int, k: int, n_est: int
) -> tuple[np.ndarray, np.ndarray]:
    ns = np.empty((n_est, k - 1), dtype=np.intp)
    bs = np.empty(n_est, dtype=np.intp)
    for i in range(n_est):  # sequential draws keep the trial prefix stable
        ns[i] = rng.choice(m, size=k - 1, replace=False)
        bs[i] = int(rng.integers(m))
    return ns, bs


def delta_w_randomized(
    data: Dataset,
    k: int,
    n_est: int = 5000,
    rng_seed: int = 0,
    r_l2: Optional[float] = None,
) -> float:
    """Randomized spread constant: minimum over n_est sampled (N, B) pairs.

    Never exceeds the exact constant; grows toward it as n_est increases
    (trials are prefix-stable in the seed).
    """
    if not (2 <= k < data.m):
        raise ValueError("need 2 <= k < m")
    if n_est < 1:
        raise ValueError("n_est must be >= 1")
    rng = rng_from_seed(rng_seed)
    ns, bs = _draw_delta_w_trials(rng, data.m, k, n_est)
    r = enclosing_radius(data, "l2") if r_l2 is None else r_l2

    best = math.inf
    chunk = max(1, int(2.0e6 // max(data.m, 1)))
    for lo in range(0, n_est, chunk):
        nidx = ns[lo : lo + chunk]  # (c, k-1)
        flat = nidx.reshape(-1)
        dmat = pairwise_sq_dists(data.points, data.points[flat])
        dmat = dmat.reshape(data.m, nidx.shape[0], k - 1).min(axis=2)
        contrib = data.weights[:, None] * dmat
        totals = contrib.sum(axis=0)
        dropped = contrib[bs[lo : lo + chunk], np.arange(nidx.shape[0])]
        best = min(best, float((totals - dropped).min()))
    if best <= 0.0:
        return math.inf
    return r * r / best


def n_packed_check(asub: np.ndarray, n_set: np.ndarray) -> bool:
    """Sufficient packedness test with the centroid as witness.

    True when every point of the subset is strictly closer to the subset
    centroid than to every point of the reference set. A set packed only
    through some non-centroid witness is missed (sufficiency caveat).
    """
    asub = np.atleast_2d(np.asarray(asub, dtype=np.float64))
    n_set = np.atleast_2d(np.asarray(n_set, dtype=np.float64))
    if asub.shape[0] == 0 or n_set.shape[0] == 0:
        raise ValueError("both sets must be nonempty")
    x = asub.mean(axis=0)
    to_x = pairwise_sq_dists(asub, x[None, :])[:, 0]
    to_n = pairwise_sq_dists(asub, n_set).min(axis=1)
    return bool(np.all(to_x < to_n))


def delta_s_exact(data: Dataset, k: int) -> float:
    """Exact monotonicity constant over packed data subsets.

    Enumerates every N (size 1..k-1) and every packed subset of the rest,
    adds the subset centroid as a candidate center and takes the worst
    potential drop. Enumeration grows as 3^m, hence the small guard.
    """
    m = data.m
    if m > DELTA_S_EXACT_MAX_POINTS:
        raise ValueError(f"exact enumeration guarded at m <= {DELTA_S_EXACT_MAX_POINTS}")
    if k < 2:
        raise ValueError("need k >= 2")
    best = 0.0
    for size in range(1, k):
        for combo in itertools.combinations(range(m), size):
            nidx = np.array(combo, dtype=np.intp)
            base = data.weights * _nn_sq_to_members(data, nidx)
            num = float(base.sum())
            rest = np.setdiff1d(np.arange(m), nidx)
            for r_size in range(1, rest.size + 1):
                for sub in itertools.combinations(rest.tolist(), r_size):
                    sub_idx = np.array(sub, dtype=np.intp)
                    if not n_packed_check(data.points[sub_idx], data.points[nidx]):
                        continue
                    x = centroid(data.subset(sub_idx))
                    with_x = np.minimum(
                        base,
                        data.weights
                        * pairwise_sq_dists(data.points, x[None, :])[:, 0],
                    )
                    den = float(with_x.sum())
                    if den <= 0.0:
                        continue
                    best = max(best, num / den - 1.0)
    return max(best, 0.0)


def delta_s_randomized(
    data: Dataset, k: int, n_est: int = 5000, rng_seed: int = 0
) -> float:
    """Randomized monotonicity constant with a random data point standing in
    for the packed subset's centroid (no packedness test, overestimates)."""
    if k < 2:
        raise ValueError("need k >= 2")
    if n_est < 1:
        raise ValueError("n_est must be >= 1")
    m = data.m
    rng = rng_from_seed(rng_seed)

    # pad every N to k-1 members by repetition (min is unaffected) so trial
    # chunks evaluate as one rectangular distance computation
    ns = np.empty((n_est, k - 1), dtype=np.intp)
    xs = np.empty(n_est, dtype=np.intp)
    for i in range(n_est):
        size = int(rng.integers(1, k))
        nidx = np.asarray(rng.choice(m, size=size, replace=False), dtype=np.intp)
        ns[i] = np.concatenate([nidx, np.repeat(nidx[-1], k - 1 - size)])
        rest = np.setdiff1d(np.arange(m), nidx)
        xs[i] = int(rest[int(rng.integers(rest.size))])

    best = 0.0
    chunk = max(1, int(2.0e6 // max(m, 1)))
    for lo in range(0, n_est, chunk):
        nidx = ns[lo : lo + chunk]  # (c, k-1)
        c = nidx.shape[0]
        members = np.concatenate([nidx, xs[lo : lo + chunk, None]], axis=1)
        dmat = pairwise_sq_dists(data.points, data.points[members.reshape(-1)])
        dmat = dmat.reshape(m, c, k)
        base = dmat[:, :, : k - 1].min(axis=2)
        with_x = np.minimum(base, dmat[:, :, k - 1])
        nums = data.weights @ base
        dens = data.weights @ with_x
        ok = dens > 0.0
        if np.any(ok):
            best = max(best, float((nums[ok] / dens[ok]).max()) - 1.0)
    return max(best, 0.0)


def branching_factor(k: int) -> float:
    """Combinatorial constant of the likelihood-ratio bound: 4^(2k-4)."""
    if k < 2:
        raise ValueError("need k >= 2")
    return 4.0 ** (2 * k - 4)


def epsilon_tilde(
    epsilon: float, delta_w: float, delta_s: float, k: int
) -> Optional[float]:
    """Effective privacy parameter; None when the budget is infeasible.

    Solves exp(eps) = (1+dw)^(k-1) + f(k)*dw*(1+ds)^(k-1)*exp(x) for x;
    infeasible when exp(eps) <= (1+dw)^(k-1).
    """
    if k < 2:
        raise ValueError("need k >= 2")
    if epsilon <= 0 or delta_w <= 0 or delta_s < 0:
        raise ValueError("epsilon and delta_w must be positive, delta_s >= 0")
    if not (math.isfinite(delta_w) and math.isfinite(delta_s)):
        return None
    numerator = math.exp(epsilon) - (1.0 + delta_w) ** (k - 1)
    if numerator <= 0.0:
        return None
    return math.log(
        numerator / (branching_factor(k) * delta_w * (1.0 + delta_s) ** (k - 1))
    )


def compute_spread_report(
    data: Dataset,
    k: int,
    method: str = "randomized",
    n_est: int = 5000,
    rng_seed: int = 0,
) -> SpreadReport:
    """Estimate both constants plus the two radii in one pass."""
    r_l2 = enclosing_radius(data, "l2")  # computed once, the dominant cost
    if method == "exact":
        dw = delta_w_exact(data, k, r_l2=r_l2)
        ds = delta_s_exact(data, k)
        n_used = None
    elif method == "randomized":
        dw = delta_w_randomized(
            data, k, n_est=n_est, rng_seed=mix_seed(rng_seed, 11), r_l2=r_l2
        )
        ds = delta_s_randomized(data, k, n_est=n_est, rng_seed=mix_seed(rng_seed, 13))
        n_used = n_est
    else:
        raise ValueError("method must be 'exact' or 'randomized'")
    return SpreadReport(
        delta_w=dw,
        delta_s=ds,
        r_l1=enclosing_radius(data, "l1"),
        r_l2_diam=r_l2,
        k=k,
        method=method,
        n_est=n_used,
    )


@dataclass(frozen=True)
class DpSeedResult:
    """Noisy seeding output plus everything needed to report its bounds."""

    centers: CenterSet
    sigma: float
    mode_requested: str
    mode_used: str
    epsilon: float
    epsilon_tilde: Optional[float]
    r_l1: float
    phi1_noise_term: Optional[float]  # m R^2 / eps-tilde^2
    phi2_noise_term: float  # m k^2 R^2 / eps^2

    def bound_phi(self, phi_opt: float) -> float:
        term = (
            self.phi1_noise_term
            if self.mode_used == "calibrated"
            else self.phi2_noise_term
        )
        return 8.0 * (phi_opt + term)


def dp_kvariates(
    data: Dataset,
    k: int,
    cfg: DpConfig,
    spread: SpreadReport,
    rng_seed: int = 0,
) -> DpSeedResult:
    """Laplace-noised seeding under an epsilon budget.

    Calibrated mode uses sigma1 = 2*sqrt(2)*R/eps-tilde and refuses when the
    effective parameter is undefined; when it is defined but not larger than
    epsilon the run silently falls back to the plain-mechanism scale
    sigma2 = 2*sqrt(2)*k*R/eps (flagged in the result).
    """
    if k != cfg.k or k != spread.k:
        raise ValueError("k must agree between data request, config and spread report")
    r = cfg.r if cfg.r is not None else spread.r_l1
    if r <= 0:
        raise ValueError("enclosing radius must be positive")

    sigma2 = 2.0 * math.sqrt(2.0) * k * r / cfg.epsilon
    et = epsilon_tilde(cfg.epsilon, spread.delta_w, spread.delta_s, k)

    mode_used = cfg.mode
    if cfg.mode == "calibrated":
        if et is None:
            raise CalibrationUndefined(
                "effective privacy parameter undefined for these spread "
                "constants; rerun in 'laplace' mode (sigma2 scale)"
            )
        if et <= cfg.epsilon:
            sigma = sigma2
            mode_used = "laplace-fallback"
        else:
            sigma = 2.0 * math.sqrt(2.0) * r / et
    else:
        sigma = sigma2

    densities = product_laplace_densities(data, sigma / math.sqrt(2.0))
    centers = kvariates_seed(
        data, SeedingConfig(k=k, seed=rng_seed, densities=densities)
    )
    phi1_term = None
    if et is not None and et > 0:
        phi1_term = data.m * r * r / (et * et)
    return DpSeedResult(
        centers=centers,
        sigma=sigma,
        mode_requested=cfg.mode,
        mode_used=mode_used,
        epsilon=cfg.epsilon,
        epsilon_tilde=et,
        r_l1=r,
        phi1_noise_term=phi1_term,
        phi2_noise_term=data.m * k * k * r * r / (cfg.epsilon * cfg.epsilon),
    )


def likelihood_exact(
    centers: CenterSet | np.ndarray,
    data: Dataset,
    densities: Sequence[LocalDensity],
    k: Optional[int] = None,
) -> float:
    """Exact output density of the seeding process by full enumeration.

    Sums, over every assignment of output centers to rounds and every
    sequence of reference points, the product of per-round pick weights
    (recomputed against the centers already emitted under that assignment)
    and density values. Factorial in (m, k), hence the tight guards.
    """
    ctr = centers.centers if isinstance(centers, CenterSet) else np.atleast_2d(centers)
    kk = ctr.shape[0] if k is None else k
    if kk != ctr.shape[0]:
        raise ValueError("k must match the number of centers")
    m = data.m
    if m > LIKELIHOOD_MAX_POINTS or kk > LIKELIHOOD_MAX_K:
        raise ValueError(
            f"guarded at m <= {LIKELIHOOD_MAX_POINTS}, k <= {LIKELIHOOD_MAX_K}"
        )
    if len(densities) != m:
        raise ValueError("one density per point required")

    w = data.weights
    pdf = np.array(
        [[densities[i].pdf(ctr[j]) for j in range(kk)] for i in range(m)]
    )

    total = 0.0
    for sigma in itertools.permutations(range(kk)):
        # step weights depend only on the emitted-center prefix
        q_steps = np.empty((kk, m))
        q_steps[0] = w / w.sum()
        for step in range(1, kk):
            prefix = ctr[np.array(sigma[:step], dtype=np.intp)]
            dmin = pairwise_sq_dists(data.points, prefix).min(axis=1)
            weights = w * dmin
            s = float(weights.sum())
            q_steps[step] = weights / s if s > 0.0 else w / w.sum()
        for seq in itertools.permutations(range(m), kk):
            term = 1.0
            for step in range(kk):
                term *= q_steps[step, seq[step]] * pdf[seq[step], sigma[step]]
                if term == 0.0:
                    break
            total += term
    return total


def lr_bound_rhs(delta_w: float, delta_s: float, k: int, rho_r: float) -> float:
    """Likelihood-ratio upper bound for neighboring datasets."""
    if delta_w < 0 or delta_s < 0 or rho_r <= 0:
        raise ValueError("inputs must be positive")
    return (1.0 + delta_w) ** (k - 1) + branching_factor(k) * delta_w * (
        1.0 + delta_s
    ) ** (k - 1) * rho_r


def laplace_ratio_bound(distance_l1: float, sigma: float) -> float:
    """Pointwise density-ratio bound of product-Laplace noise at scale
    sigma/sqrt(2) for means at most distance_l1 apart in L1."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return math.exp(math.sqrt(2.0) * distance_l1 / sigma)


@dataclass(frozen=True)
class SampledRegimeReport:
    """Ratio-bound report for i.i.d.-sampled datasets."""

    g_value: float
    condition_met: bool
    ratio_bound: float
    rho_2r: float


def sampled_regime_report(
    m: int,
    k: int,
    d: int,
    r: float,
    sigma: float,
    rho_d: float,
    delta: float,
) -> SampledRegimeReport:
    """Evaluate the high-probability ratio bound for sampled data.

    g(m,k,d,R) = 4/m^(1/4 + 1/(d+1)) + (64/k^(2/d))^k * rho(2R)/m, the
    cluster-count condition k <= (delta^2/(4 rho_d)) sqrt(m) (inclusive),
    and the resulting bound 1 + rho_d^k * g.
    """
    if min(m, k, d) < 1 or r <= 0 or sigma <= 0 or rho_d < 1:
        raise ValueError("inputs must be positive (rho_d >= 1)")
    if not (0.0 < delta < 0.5):
        raise ValueError("delta must lie in (0, 1/2)")
    rho_2r = laplace_ratio_bound(2.0 * 2.0 * r, sigma)  # rho at radius 2R
    g = 4.0 / m ** (0.25 + 1.0 / (d + 1)) + (64.0 / k ** (2.0 / d)) ** k * rho_2r / m
    condition = k <= (delta * delta / (4.0 * rho_d)) * math.sqrt(m)
    return SampledRegimeReport(
        g_value=g,
        condition_met=bool(condition),
        ratio_bound=1.0 + rho_d**k * g,
        rho_2r=rho_2r,
    )


def forgy_dp_baseline(
    data: Dataset, k: int, epsilon: float, r: float, rng_seed: int = 0
) -> CenterSet:
    """Uniform picks without replacement, each released with Laplace noise
    at the plain-mechanism scale sigma2 = 2*sqrt(2)*k*R/epsilon."""
    if k > data.m:
        raise ValueError("k cannot exceed m")
    if epsilon <= 0 or r <= 0:
        raise ValueError("epsilon and r must be positive")
    rng = rng_from_seed(rng_seed)
    sigma2 = 2.0 * math.sqrt(2.0) * k * r / epsilon
    scale = sigma2 / math.sqrt(2.0)

    picks = []
    remaining = list(range(data.m))
    for _ in range(k):
        pos = categorical(rng, np.ones(len(remaining)))
        picks.append(remaining.pop(pos))
    centers = data.points[np.array(picks, dtype=np.intp)] + rng.laplace(
        0.0, scale, size=(k, data.d)
    )
    prov = tuple(
        CenterProvenance(iteration=t + 1, source=f"point:{i}", reference=i, noisy=True)
        for t, i in enumerate(picks)
    )
    return CenterSet(centers, prov)


def _block_count(m: int) -> int:
    # ceil(m^0.4) with float-slop absorption (1e5**0.4 must give 100)
    return int(math.ceil(m**0.4 - 1e-9))


def gupt_style_baseline(
    data: Dataset,
    k: int,
    epsilon: float,
    r: float,
    rng_seed: int = 0,
    lloyd_iters: int = 20,
) -> CenterSet:
    """Block-aggregation baseline: shuffle into ceil(m^0.4) blocks, cluster
    each, align the block center lists greedily to the first block, average,
    then add Laplace noise shrunk by the block count."""
    if epsilon <= 0 or r <= 0:
        raise ValueError("epsilon and r must be positive")
    ell = _block_count(data.m)
    if data.m // ell < k:
        raise ValueError("blocks would hold fewer than k points")
    rng = rng_from_seed(rng_seed)

    perm = rng.permutation(data.m)
    blocks = np.array_split(perm, ell)
    per_block: list[np.ndarray] = []
    for b, idx in enumerate(blocks):
        sub = data.subset(idx)
        seeded = kmeanspp_seed(sub, k, seed=mix_seed(rng_seed, 100 + b))
        per_block.append(lloyd_refine(sub, seeded, iters=lloyd_iters).centers)

    aligned = [per_block[0]]
    for other in per_block[1:]:
        aligned.append(_greedy_align(per_block[0], other))
    mean_centers = np.mean(np.stack(aligned), axis=0)

    scale = 2.0 * k * r / (ell * epsilon)  # (2*sqrt(2)kR/(ell*eps)) / sqrt(2)
    noisy = mean_centers + rng.laplace(0.0, scale, size=mean_centers.shape)
    prov = tuple(
        CenterProvenance(iteration=t + 1, source=f"block-average:{ell}", noisy=True)
        for t in range(k)
    )
    return CenterSet(noisy, prov)


def _greedy_align(reference: np.ndarray, other: np.ndarray) -> np.ndarray:
    """Match rows of `other` onto `reference` slots, closest pairs first."""
    k = reference.shape[0]
    cost = pairwise_sq_dists(reference, other)
    out = np.empty_like(other)
    used_ref: set[int] = set()
    used_oth: set[int] = set()
    order = np.argsort(cost, axis=None)
    for flat in order:
        i, j = divmod(int(flat), k)
        if i in used_ref or j in used_oth:
            continue
        out[i] = other[j]
        used_ref.add(i)
        used_oth.add(j)
        if len(used_ref) == k:
            break
    return out
