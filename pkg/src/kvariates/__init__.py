"""Generalized biased clustering seeding: noisy densities and probe maps on
top of the classical D^2 process, with distributed, streaming, online and
differentially private specializations, estimators, exact small-instance
oracles, baselines and a bound-checking bench."""

from .bench import (
    BoundValue,
    RegressionFit,
    TrialReport,
    bound_report,
    fit_log_model,
    rho_phi,
    rho_prime_phi,
    run_trials,
)
from .datagen import (
    HyperrectClusterSpec,
    KNOWN_DATASET_SHAPES,
    PeerAssignment,
    gen_hyperrect_clusters,
    load_dataset,
    migrate_points,
    peers_from_real,
    save_dataset,
    validate_known_shape,
)
from .densities import LocalDensity, dirac_densities, product_laplace_densities
from .densities import sample_product_laplace
from .distributed import (
    ForgyNode,
    LedgerViolation,
    MessageLog,
    PeerNetwork,
    dkmeans_private,
    dkmeans_protected,
    forgy_spread,
    kmeans_parallel_baseline,
)
from .geometry import (
    CenterProvenance,
    CenterSet,
    Dataset,
    Distortion,
    PotentialBreakdown,
    brute_force_optimum,
    centroid,
    enclosing_radius,
    phi_bias,
    phi_variance,
    potential,
    sq_dist,
    total_jensen,
)
from .privacy import (
    CalibrationUndefined,
    DpConfig,
    DpSeedResult,
    SampledRegimeReport,
    SpreadReport,
    compute_spread_report,
    delta_s_exact,
    delta_s_randomized,
    delta_w_exact,
    delta_w_randomized,
    dp_kvariates,
    epsilon_tilde,
    forgy_dp_baseline,
    gupt_style_baseline,
    likelihood_exact,
    lr_bound_rhs,
    n_packed_check,
    sampled_regime_report,
)
from .probes import Probe
from .seeding import (
    EtaEstimate,
    SeedingConfig,
    estimate_eta,
    kmeanspp_seed,
    kvariates_seed,
    lloyd_refine,
)
from .streaming import (
    MinibatchStream,
    SynopsisSet,
    VarsigmaEstimate,
    build_synopses_online,
    build_synopses_uniform,
    estimate_varsigma,
    okmeans_run,
    probe_spread,
    skmeans,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
