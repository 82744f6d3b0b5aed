"""Occupancy statistics for the multinomial allocation model.

n balls fall independently into N boxes, box k with probability q_k. This
package computes the exact means, variances, and covariances of the
occupancy proportions (the fraction of boxes holding exactly r balls),
their Poisson-limit expansions with certified two-sided remainder
intervals, and reproducible Monte Carlo estimates with standard errors.
"""

from .approx import (
    ApproxExpansion,
    BoundReport,
    bounds_applicable,
    certify_bounds,
    covariance_expansion,
    default_verification_corpus,
    equiprobable_envelope,
    make_bound_report,
    mean_expansion,
    r0_bounds,
    r0_residual,
    r1_bounds,
    r2_bounds,
    residual_r1,
    residual_r2_cov,
    residual_r2_var,
    variance_expansion,
    variance_residual_bounds,
)
from .errors import (
    ApplicabilityError,
    BoxloadError,
    EmptyList,
    EqualIndices,
    FactorialOverflow,
    NegativeInput,
    NonFiniteFunctional,
    NonPositiveWeight,
    ProfileParseError,
    RangeError,
    SumNotOne,
    TooLarge,
    ZeroBoxes,
)
from .exact import (
    MomentSet,
    brute_force_moments,
    exact_covariance,
    exact_mean,
    exact_variance,
    phi,
    q_functional,
)
from .model import (
    AllocationModel,
    WeightProfile,
    e_xi,
    e_xi_pair,
    equiprobable_profile,
    load_profile,
    make_profile,
    parse_profile_spec,
    parse_profile_text,
    powerlaw_profile,
)
from .sim import (
    SimulationSummary,
    figure1_data,
    replicate_rng,
    sample_allocation,
    simulate,
)
from .special import (
    delta,
    delta_star,
    log_binomial,
    log_factorial,
    log_multinomial,
    poisson_weight,
    poisson_weights,
    varphi,
    varphi_star,
)

__version__ = "0.1.0"
