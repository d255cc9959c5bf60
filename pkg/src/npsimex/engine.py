"""The SIMEX engine: remeasurement, trace assembly, and extrapolation.

Parametric remeasurement adds sqrt(lambda) * sigma-hat Gaussian noise to the
proxy; nonparametric remeasurement adds the sum of lambda resampled draws
from the empirical error set. The engine averages B remeasured estimates per
grid point, fits an extrapolant per coordinate, and evaluates it at
lambda = -1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

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
from .exceptions import ConfigurationError, MethodFailureError
from .extrapolation import ExtrapolantFit, LambdaGrid, fit_extrapolant
from .streams import RandomStream, as_generator

_MAX_FAILURE_FRACTION = 0.1


def psimex_remeasure(x_tilde, sigma_hat, lam, rng) -> np.ndarray:
    """Proxy plus sqrt(lambda) * sigma_hat standard-normal noise."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if sigma_hat < 0:
        raise ValueError("sigma_hat must be non-negative")
    x_tilde = np.asarray(x_tilde, dtype=float)
    if lam == 0 or sigma_hat == 0:
        return x_tilde.copy()
    g = as_generator(rng)
    return x_tilde + np.sqrt(lam) * sigma_hat * g.standard_normal(x_tilde.size)


def npsimex_remeasure(x_tilde, error_set: ErrorSet, lam, rng) -> np.ndarray:
    """Proxy plus the sum of lambda with-replacement draws from the error set."""
    if lam != int(lam) or lam < 0:
        raise ValueError("lambda must be a non-negative integer")
    lam = int(lam)
    x_tilde = np.asarray(x_tilde, dtype=float)
    values = error_set.values
    if lam == 0:
        return x_tilde.copy()
    g = as_generator(rng)
    idx = g.integers(0, values.size, size=(lam, x_tilde.size))
    return x_tilde + values[idx].sum(axis=0)


@dataclass
class SimexTrace:
    """Per-lambda averaged estimates plus the retained raw replicates.

    raw[m] is a (B_m, d) array of per-replicate estimates at grid point m
    (a single row at lambda = 0, where remeasurement is the identity).
    raw_variances[m], when retained, is (B_m, d, d).
    """

    lambdas: np.ndarray
    mean_estimates: np.ndarray  # (M, d)
    raw: list[np.ndarray]
    raw_variances: list[np.ndarray] | None
    B: int
    failures: list[int] = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.mean_estimates.shape[1]


@dataclass
class SimexResult:
    """Corrected estimate with full provenance: trace, fits, configuration."""

    estimate: np.ndarray  # (d,), the extrapolated value per coordinate
    trace: SimexTrace
    fits: list[ExtrapolantFit] | None
    method: str  # "P", "NP", or "naive"
    config: dict

    @property
    def d(self) -> int:
        return self.estimate.size

    def trace_rows(self):
        """Rows (method, coordinate, lambda, estimate, b_count) for export."""
        rows = []
        for j in range(self.trace.d):
            for m, lam in enumerate(self.trace.lambdas):
                rows.append(
                    (
                        self.method,
                        j,
                        float(lam),
                        float(self.trace.mean_estimates[m, j]),
                        int(self.trace.raw[m].shape[0]),
                    )
                )
        return rows


def export_trace_csv(results, path) -> None:
    """Write extrapolation traces of one or more results to CSV."""
    if isinstance(results, SimexResult):
        results = [results]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "coordinate", "lambda", "estimate", "b_count"])
        for result in results:
            writer.writerows(result.trace_rows())


def _resolve_inputs(data, validation, contrast, sigma2_override, method):
    """Work out the working proxy, error set, and operative error variance.

    In validation mode both methods share the single proxy (or replicate
    mean), and the noise scale is the raw residual variance. In replicate
    mode the two methods consume the replicates differently: the empirical
    method averages them into a combined proxy and resamples the contrast
    errors, while the Gaussian-noise method works from a single replicate
    column, so its noise scale is the full single-measurement variance
    (the contrasts serve only to estimate that variance).
    """
    if validation is not None:
        x_tilde = (
            data.x_star[:, 0] if data.k == 1 else data.x_star.mean(axis=1)
        )
        error_set = error_set_from_validation(validation)
        sigma2 = (
            sigma2_override
            if sigma2_override is not None
            else estimate_sigma2_from_validation(validation)
        )
        return x_tilde, error_set, sigma2
    if data.k < 2:
        raise ConfigurationError(
            "replicate-based SIMEX needs k >= 2 replicates or validation pairs"
        )
    a = contrast if contrast is not None else contrast_for(data.k)
    x_tilde, error_set = error_set_from_replicates(data.x_star, a)
    if sigma2_override is not None:
        sigma2 = sigma2_override
    elif data.k == 2:
        sigma2 = estimate_sigma2(data.x_star)
    else:
        sigma2 = estimate_sigma2_pooled(data.x_star)
    if method == "P":
        return data.x_star[:, 0], error_set, sigma2
    return x_tilde, error_set, sigma2


def naive_estimate(
    data: ObservedData,
    estimator,
    validation: ValidationPairs | None = None,
    contrast: Contrast | None = None,
    keep_variances: bool = False,
) -> SimexResult:
    """The uncorrected fit on the working proxy, packaged as a SimexResult."""
    if data.k == 1:
        x_tilde = data.x_star[:, 0]
    elif validation is not None:
        x_tilde = data.x_star.mean(axis=1)
    else:
        a = contrast if contrast is not None else contrast_for(data.k)
        x_tilde, _ = error_set_from_replicates(data.x_star, a)
    coef = np.asarray(estimator.fit(data.y, x_tilde, data.z), dtype=float)
    raw_vars = None
    if keep_variances and getattr(estimator, "has_variance", False):
        raw_vars = [estimator.variance(data.y, x_tilde, data.z, coef)[None, :, :]]
    trace = SimexTrace(
        lambdas=np.array([0.0]),
        mean_estimates=coef[None, :],
        raw=[coef[None, :]],
        raw_variances=raw_vars,
        B=0,
    )
    return SimexResult(coef.copy(), trace, None, "naive", {"estimator": estimator.name})


def run_simex(
    data: ObservedData,
    estimator,
    method: str,
    stream: RandomStream,
    validation: ValidationPairs | None = None,
    grid: LambdaGrid | None = None,
    B: int = 100,
    extrapolant: str = "quadratic",
    contrast: Contrast | None = None,
    sigma2_override: float | None = None,
    keep_variances: bool = False,
) -> SimexResult:
    """Run the full simulation and extrapolation procedure.

    The lambda = 0 anchor is computed once from the unmodified proxy (the
    remeasurement is the identity there); B replicates run for each
    lambda > 0. Replicate b draws from the substream derived with label
    ("b", b), so results do not depend on evaluation order. Within a
    replicate the noise is built incrementally across the grid: each level
    adds fresh draws on top of the previous level, which leaves every
    level's marginal distribution unchanged while sharing draws across
    levels of the same replicate.
    """
    if method not in ("P", "NP"):
        raise ConfigurationError(f"method must be 'P' or 'NP', got {method!r}")
    if B < 1:
        raise ConfigurationError("B must be at least 1")
    if grid is None:
        grid = (
            LambdaGrid.parametric() if method == "P" else LambdaGrid.nonparametric()
        )
    expected_mode = "parametric" if method == "P" else "nonparametric"
    if grid.mode != expected_mode:
        raise ConfigurationError(
            f"method {method} requires a {expected_mode} grid, got {grid.mode}"
        )
    x_tilde, error_set, sigma2 = _resolve_inputs(
        data, validation, contrast, sigma2_override, method
    )
    sigma_hat = float(np.sqrt(sigma2))
    keep_variances = keep_variances and getattr(estimator, "has_variance", False)

    anchor = np.asarray(estimator.fit(data.y, x_tilde, data.z), dtype=float)
    d = anchor.size
    M = grid.size
    lams = grid.values
    n = x_tilde.size

    estimates = [[] for _ in range(M)]
    variances = [[] for _ in range(M)] if keep_variances else None
    failures = [0] * M
    estimates[0].append(anchor)
    if keep_variances:
        variances[0].append(estimator.variance(data.y, x_tilde, data.z, anchor))

    values = error_set.values
    for b in range(B):
        g = stream.derive("b", b).generator
        if method == "P":
            nu = g.standard_normal(n)
        else:
            noise = np.zeros(n)
        prev_lam = 0.0
        for m in range(1, M):
            lam = lams[m]
            if method == "P":
                x_b = x_tilde + np.sqrt(lam) * sigma_hat * nu
            else:
                steps = int(round(lam - prev_lam))
                idx = g.integers(0, values.size, size=(steps, n))
                noise = noise + values[idx].sum(axis=0)
                prev_lam = lam
                x_b = x_tilde + noise
            try:
                coef = np.asarray(estimator.fit(data.y, x_b, data.z), dtype=float)
            except MethodFailureError:
                failures[m] += 1
                continue
            estimates[m].append(coef)
            if keep_variances:
                variances[m].append(
                    estimator.variance(data.y, x_b, data.z, coef)
                )

    for m in range(1, M):
        if failures[m] > _MAX_FAILURE_FRACTION * B:
            raise MethodFailureError(
                f"{failures[m]} of {B} remeasured fits failed at "
                f"lambda={lams[m]:g} (limit {_MAX_FAILURE_FRACTION:.0%})"
            )

    raw = [np.vstack(e) for e in estimates]
    mean_estimates = np.vstack([r.mean(axis=0) for r in raw])
    raw_variances = (
        [np.stack(v) for v in variances] if keep_variances else None
    )
    trace = SimexTrace(
        lambdas=lams.copy(),
        mean_estimates=mean_estimates,
        raw=raw,
        raw_variances=raw_variances,
        B=B,
        failures=failures,
    )

    fits = []
    corrected = np.empty(d)
    for j in range(d):
        fit = fit_extrapolant(lams, mean_estimates[:, j], extrapolant)
        fits.append(fit)
        corrected[j] = fit.predict(-1.0)

    config = {
        "estimator": estimator.name,
        "method": method,
        "extrapolant": extrapolant,
        "B": B,
        "grid": {"mode": grid.mode, "values": [float(v) for v in lams]},
        "sigma2": sigma2 if method == "P" else None,
        "sigma2_override": sigma2_override,
        "seed": stream.seed,
        "stream_path": list(stream.path),
        "error_set_size": int(len(error_set)),
    }
    return SimexResult(corrected, trace, fits, method, config)
