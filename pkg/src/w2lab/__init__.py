"""Simulation lab for quadratic-transport-cost rates in the conditional CLT.

Exact 1-D Wasserstein distances via quantile integrals, generators for the
dependent example processes, exact and Monte Carlo dependence coefficients,
a transfer-matrix oracle for lattice chains, and an experiment harness with
a CLI front door.
"""

from .gaussian import (
    GaussianLaw,
    komatu_ratio,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    superquantile,
)
from .transport import (
    EmpiricalDist,
    LatticeDist,
    PreconditionError,
    QuantileGapReport,
    conditional_w2_dominates,
    kp_integral,
    quantile_gap_bound,
    verify_prop_quantile,
    w2_empirical_gaussian,
    w2_lattice_gaussian,
    wp_empirical,
)
from .processes import (
    CircleWalkSpec,
    FiniteMarkovSpec,
    IidSpec,
    LsvSpec,
    MartingaleSpec,
    TwoPointSpec,
    circle_observable,
    construct_two_point,
    default_circle_walk,
    lsv_step,
    martingale_difference_path,
    model_from_dict,
    model_to_dict,
    rademacher,
    sample_moment_matched,
    sample_path,
    simulate_sums,
    two_state_symmetric,
)
from .coefficients import (
    Beta3Estimate,
    CoefficientTable,
    LimitConstants,
    alpha_dep,
    beta3,
    limit_constants,
    sigma2_estimated,
    sigma2_exact,
    theta_exact,
    theta_mc,
    var_sn,
)
from .oracle import (
    ConditionalSumLaw,
    NotLatticeError,
    conditional_sn_law,
    exact_berry_esseen,
    exact_conditional_w2,
    exact_quantile_gaps,
    exact_superquantile_gap,
    exact_unconditional_w2,
)
from .harness import (
    ExperimentConfig,
    RateFit,
    berry_esseen_mc,
    estimate_conditional_w2,
    estimate_w2,
    estimate_w2_grid,
    fit_rate,
    run_report,
)

__version__ = "0.1.0"
