"""Parametric and nonparametric simulation extrapolation (SIMEX) for
correcting additive measurement error, with a Monte Carlo study harness."""

from .data import (
    Contrast,
    ErrorSet,
    ObservedData,
    ValidationPairs,
    contrast_for,
    error_set_from_replicates,
    error_set_from_validation,
    estimate_sigma2,
    estimate_sigma2_from_validation,
    estimate_sigma2_pooled,
)
from .distributions import DistributionSpec, sample
from .engine import (
    SimexResult,
    SimexTrace,
    export_trace_csv,
    naive_estimate,
    npsimex_remeasure,
    psimex_remeasure,
    run_simex,
)
from .estimators import (
    FourthMomentEstimator,
    LogisticEstimator,
    fourth_moment,
    fourth_moment_variance,
    logistic_fit,
    logistic_variance,
    make_estimator,
)
from .exceptions import (
    ConfigurationError,
    ConvergenceError,
    DataFormatError,
    ExtrapolationError,
    MethodFailureError,
    NpSimexError,
    SeparationError,
)
from .extrapolation import ExtrapolantFit, LambdaGrid, fit_extrapolant
from .io import read_observed_csv, read_validation_csv
from .metrics import MethodMetrics, MetricsReport, compute_coverage, compute_mse
from .scenarios import (
    BUILTIN_SCENARIOS,
    ScenarioSpec,
    aggregate,
    builtin_scenario,
    generate_dataset,
    run_rep,
    run_scenario,
)
from .streams import RandomStream, derive_stream
from .variance import BootstrapSpec, VarianceReport, bootstrap_ci, simex_variance

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_SCENARIOS",
    "BootstrapSpec",
    "ConfigurationError",
    "Contrast",
    "ConvergenceError",
    "DataFormatError",
    "DistributionSpec",
    "ErrorSet",
    "ExtrapolantFit",
    "ExtrapolationError",
    "FourthMomentEstimator",
    "LambdaGrid",
    "LogisticEstimator",
    "MethodFailureError",
    "MethodMetrics",
    "MetricsReport",
    "NpSimexError",
    "ObservedData",
    "RandomStream",
    "ScenarioSpec",
    "SeparationError",
    "SimexResult",
    "SimexTrace",
    "ValidationPairs",
    "VarianceReport",
    "aggregate",
    "bootstrap_ci",
    "builtin_scenario",
    "compute_coverage",
    "compute_mse",
    "contrast_for",
    "derive_stream",
    "error_set_from_replicates",
    "error_set_from_validation",
    "estimate_sigma2",
    "estimate_sigma2_from_validation",
    "estimate_sigma2_pooled",
    "export_trace_csv",
    "fit_extrapolant",
    "fourth_moment",
    "fourth_moment_variance",
    "generate_dataset",
    "logistic_fit",
    "logistic_variance",
    "make_estimator",
    "naive_estimate",
    "npsimex_remeasure",
    "psimex_remeasure",
    "read_observed_csv",
    "read_validation_csv",
    "run_rep",
    "run_scenario",
    "run_simex",
    "sample",
    "simex_variance",
]
