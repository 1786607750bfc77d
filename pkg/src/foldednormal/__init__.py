"""Folded normal distribution: density, transforms, entropy, maximum likelihood and coverage studies."""

from .distribution import (
    MomentSummary,
    Params,
    cdf,
    cf,
    cumulant_gf,
    fourier,
    laplace,
    logpdf,
    mean_residual_life,
    mgf,
    mode,
    moments,
    pdf,
    quantile,
    sample,
    sf,
)
from .estimation import (
    ConvergenceError,
    Dataset,
    FitError,
    FitResult,
    Method,
    SingularInformationError,
    asymptotic_ci,
    fit,
    fit_recursive,
    fit_rootsearch,
    fit_simplex,
    loglik,
    observed_information,
)
from .information import (
    entropy_quadrature,
    entropy_series,
    kl_from_halfnormal,
    kl_from_normal_quadrature,
    kl_from_normal_series,
)
from .resampling import BootstrapResult, bootstrap_percentile, empirical_quantile
from .studies import CoverageCell, StudyConfig, emit_tables, negative_mass_table, run_coverage

__version__ = "0.1.0"
