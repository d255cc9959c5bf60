"""Uncertainty quantification: SIMEX-based variance extrapolation and the
bias-corrected percentile bootstrap.

The SIMEX variance method extrapolates two curves per coordinate: the
average per-replicate model variance (an estimate of the error-free
estimator's variance) and the difference between that extrapolated value
and the between-replicate spread of the remeasured estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .data import ObservedData, ValidationPairs
from .engine import SimexTrace
from .exceptions import MethodFailureError
from .extrapolation import fit_extrapolant
from .streams import RandomStream

_MAX_FAILURE_FRACTION = 0.1


@dataclass(frozen=True)
class BootstrapSpec:
    """Bootstrap configuration; the method is the bias-corrected percentile."""

    n_boot: int = 500
    level: float = 0.95
    method: str = "bc_percentile"

    def __post_init__(self) -> None:
        if self.n_boot < 100:
            raise ValueError("n_boot must be at least 100")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must be in (0, 1)")
        if self.method != "bc_percentile":
            raise ValueError(f"unsupported bootstrap method {self.method!r}")


@dataclass
class VarianceReport:
    """Per-coordinate pieces of the SIMEX variance extrapolation.

    s_delta_sq and v_lambda have shape (M, d); var_truth_hat and
    var_npsimex_hat have shape (d,). negative_flag marks coordinates whose
    extrapolated variance came out negative (reported, never clamped).
    """

    lambdas: np.ndarray
    avg_model_variance: np.ndarray  # (M, d) mean over b of var-hat diagonals
    s_delta_sq: np.ndarray  # (M, d) between-replicate sample variance
    v_lambda: np.ndarray  # (M, d)
    var_truth_hat: np.ndarray  # (d,)
    var_npsimex_hat: np.ndarray  # (d,)
    negative_flag: np.ndarray  # (d,) bool
    extrapolant: str
    s_delta_formula: str = "squared deviations, divisor B-1"

    def to_dict(self) -> dict:
        return {
            "lambdas": self.lambdas.tolist(),
            "avg_model_variance": self.avg_model_variance.tolist(),
            "s_delta_sq": self.s_delta_sq.tolist(),
            "v_lambda": self.v_lambda.tolist(),
            "var_truth_hat": self.var_truth_hat.tolist(),
            "var_npsimex_hat": self.var_npsimex_hat.tolist(),
            "negative_variance": self.negative_flag.tolist(),
            "extrapolant": self.extrapolant,
            "s_delta_formula": self.s_delta_formula,
        }


def simex_variance(trace: SimexTrace, kind: str = "quadratic") -> VarianceReport:
    """Variance extrapolation from a trace retaining per-replicate output.

    For each lambda: average the per-replicate model variances over b and
    compute the between-replicate sample variance S-delta-squared of the
    estimates (zero at lambda = 0, where there is a single exact fit).
    Extrapolate the first curve to -1 for the truth variance, then
    extrapolate V(lambda) = var_truth_hat - S_delta_sq(lambda) to -1.
    """
    if trace.raw_variances is None:
        raise ValueError("trace was run without keep_variances")
    if trace.B < 2:
        raise ValueError("variance extrapolation needs B >= 2")
    M = trace.lambdas.size
    d = trace.d
    avg_model = np.empty((M, d))
    s_delta = np.empty((M, d))
    for m in range(M):
        vars_m = trace.raw_variances[m]  # (B_m, d, d)
        avg_model[m] = vars_m.reshape(vars_m.shape[0], d, d).diagonal(
            axis1=1, axis2=2
        ).mean(axis=0)
        raw_m = trace.raw[m]
        if raw_m.shape[0] < 2:
            s_delta[m] = 0.0
        else:
            s_delta[m] = raw_m.var(axis=0, ddof=1)

    var_truth = np.empty(d)
    var_np = np.empty(d)
    v_lambda = np.empty((M, d))
    for j in range(d):
        fit_truth = fit_extrapolant(trace.lambdas, avg_model[:, j], kind)
        var_truth[j] = fit_truth.predict(-1.0)
        v_lambda[:, j] = var_truth[j] - s_delta[:, j]
        fit_v = fit_extrapolant(trace.lambdas, v_lambda[:, j], kind)
        var_np[j] = fit_v.predict(-1.0)
    return VarianceReport(
        lambdas=trace.lambdas.copy(),
        avg_model_variance=avg_model,
        s_delta_sq=s_delta,
        v_lambda=v_lambda,
        var_truth_hat=var_truth,
        var_npsimex_hat=var_np,
        negative_flag=var_np < 0,
        extrapolant=kind,
    )


def _bc_interval(boot: np.ndarray, point: float, level: float) -> tuple[float, float]:
    """Bias-corrected percentile interval for one coordinate."""
    R = boot.size
    below = np.count_nonzero(boot < point)
    # clip the percentile rank away from 0 and 1 so z0 stays finite
    prop = np.clip(below / R, 1.0 / (R + 1), R / (R + 1.0))
    z0 = norm.ppf(prop)
    alpha = 1.0 - level
    z_lo = norm.ppf(alpha / 2.0)
    z_hi = norm.ppf(1.0 - alpha / 2.0)
    q_lo = norm.cdf(2.0 * z0 + z_lo)
    q_hi = norm.cdf(2.0 * z0 + z_hi)
    lo = float(np.quantile(boot, q_lo))
    hi = float(np.quantile(boot, q_hi))
    return lo, hi


def bootstrap_ci(
    data: ObservedData,
    procedure,
    spec: BootstrapSpec,
    stream: RandomStream,
    validation: ValidationPairs | None = None,
    point: np.ndarray | None = None,
):
    """Bias-corrected percentile intervals for a full-analysis closure.

    procedure(data, validation, stream) must return a coefficient vector
    and be deterministic given its inputs. Rows of the main data and the
    validation pairs are resampled as separate strata, preserving their
    sizes. Failed resamples are dropped; more than 10% failures aborts.

    Returns (intervals, point, n_failures) with intervals an array of
    (lo, hi) rows per coordinate.
    """
    if point is None:
        point = procedure(data, validation, stream.derive("point"))
    point = np.asarray(point, dtype=float)

    boot_rows = []
    failures = 0
    n = data.n
    for r in range(spec.n_boot):
        sub = stream.derive("boot", r)
        g = sub.derive("resample").generator
        idx = g.integers(0, n, size=n)
        data_r = ObservedData(
            None if data.y is None else data.y[idx],
            data.x_star[idx],
            data.z[idx],
        )
        validation_r = None
        if validation is not None:
            vidx = g.integers(0, validation.n, size=validation.n)
            validation_r = ValidationPairs(
                validation.x_true[vidx], validation.x_star[vidx], validation.flavor
            )
        try:
            est = procedure(data_r, validation_r, sub.derive("run"))
        except MethodFailureError:
            failures += 1
            continue
        boot_rows.append(np.asarray(est, dtype=float))
    if failures > _MAX_FAILURE_FRACTION * spec.n_boot:
        raise MethodFailureError(
            f"{failures} of {spec.n_boot} bootstrap resamples failed"
        )
    boot = np.vstack(boot_rows)
    intervals = np.array(
        [_bc_interval(boot[:, j], point[j], spec.level) for j in range(point.size)]
    )
    return intervals, point, failures
