"""Exact finite-sample inference for load-sharing systems.

Failure times of M independent systems are modeled by sequential order
statistics: conditionally on j-1 observed failures, surviving components
fail with hazard rate gamma_j * f/(1-F) for a baseline cdf F.  The package
provides the semiparametric profile-likelihood estimator of gamma, exact
Monte Carlo tests of parametric hypotheses about gamma, and exact
conditional goodness-of-fit tests for F, together with the simulation
machinery to tabulate critical values and power.
"""

from ._backend import BACKEND, backend_name
from .baseline import (
    BaselineCdf,
    ExponentialBaseline,
    GammaBaseline,
    UniformBaseline,
    WeibullBaseline,
    parse_baseline,
)
from .data import DataMatrix, RankStructure, perturb_ties, rank_structure
from .errors import ConfigError, ConvergenceError, DataError
from .estimators import (
    PLFitResult,
    fit_profile_likelihood,
    mle_known_baseline,
    nelson_aalen,
    profile_loglik,
)
from .gof import (
    GofTestSpec,
    conditional_gof_test,
    conditional_pvalues,
    conditional_sample,
    ks_statistic,
    simulate_conditional_pvalues,
    weighted_ks_statistic,
    z_statistic,
)
from .params import ModelParams, from_alpha, from_censoring_scheme
from .paramtests import (
    ParamTestSpec,
    TestReport,
    exact_critical_value,
    lr_statistic,
    power_curve,
    power_curves,
    simulate_null_statistics,
    test_gamma,
    test_static_intensities,
    wald_statistic,
)
from .sampling import exponential_scale, replicate_stream, sample, spacing_statistics
from .stepfn import StepFunction
from .variance import (
    VarianceFunction,
    b_coeffs,
    expected_gamma_at_risk,
    g_variance,
    prob_stage_count,
    weight_k,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "backend_name",
    "BaselineCdf",
    "UniformBaseline",
    "ExponentialBaseline",
    "WeibullBaseline",
    "GammaBaseline",
    "parse_baseline",
    "DataMatrix",
    "RankStructure",
    "rank_structure",
    "perturb_ties",
    "ConfigError",
    "DataError",
    "ConvergenceError",
    "ModelParams",
    "from_alpha",
    "from_censoring_scheme",
    "PLFitResult",
    "fit_profile_likelihood",
    "mle_known_baseline",
    "profile_loglik",
    "nelson_aalen",
    "StepFunction",
    "replicate_stream",
    "sample",
    "exponential_scale",
    "spacing_statistics",
    "VarianceFunction",
    "b_coeffs",
    "expected_gamma_at_risk",
    "prob_stage_count",
    "g_variance",
    "weight_k",
    "ParamTestSpec",
    "TestReport",
    "lr_statistic",
    "wald_statistic",
    "simulate_null_statistics",
    "exact_critical_value",
    "test_gamma",
    "test_static_intensities",
    "power_curve",
    "power_curves",
    "GofTestSpec",
    "ks_statistic",
    "weighted_ks_statistic",
    "z_statistic",
    "conditional_sample",
    "conditional_gof_test",
    "conditional_pvalues",
    "simulate_conditional_pvalues",
    "__version__",
]
