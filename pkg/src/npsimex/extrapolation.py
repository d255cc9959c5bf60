"""Lambda grids and extrapolant curves.

The extrapolation step fits a parametric curve to the (lambda, estimate)
trace and evaluates it at lambda = -1. Linear and quadratic curves are fit
by ordinary least squares; the rational ("nonlinear") curve
g(lambda) = g1 + g2 / (g3 + lambda) by damped Gauss-Newton initialized from
the quadratic fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ExtrapolationError

_N_PARAMS = {"linear": 2, "quadratic": 3, "rational": 3}


@dataclass(frozen=True)
class LambdaGrid:
    """Sorted grid of remeasurement levels, anchored at zero."""

    values: np.ndarray
    mode: str  # "parametric" (reals) or "nonparametric" (integers)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if self.mode not in ("parametric", "nonparametric"):
            raise ValueError(f"unknown grid mode {self.mode!r}")
        if values.ndim != 1 or values.size < 3:
            raise ValueError("grid needs at least three points")
        if np.any(values < 0):
            raise ValueError("grid values must be non-negative")
        if np.any(np.diff(values) <= 0):
            raise ValueError("grid values must be strictly increasing")
        if values[0] != 0.0:
            raise ValueError("grid must include zero")
        if self.mode == "nonparametric" and np.any(values != np.round(values)):
            raise ValueError("nonparametric grid values must be integers")

    @classmethod
    def parametric(cls, maximum: float = 2.0, size: int = 10) -> "LambdaGrid":
        return cls(np.linspace(0.0, maximum, size), "parametric")

    @classmethod
    def nonparametric(cls, size: int = 10) -> "LambdaGrid":
        return cls(np.arange(size, dtype=float), "nonparametric")

    @property
    def size(self) -> int:
        return self.values.size


@dataclass
class ExtrapolantFit:
    """Fitted extrapolant with a predict() operation.

    For linear/quadratic fits, coef holds ascending polynomial coefficients.
    For the rational fit, coef is (g1, g2, g3).
    """

    kind: str
    coef: np.ndarray
    rss: float
    converged: bool = True
    lambda_max: float = field(default=0.0)

    def predict(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.kind == "rational":
            g1, g2, g3 = self.coef
            out = g1 + g2 / (g3 + lam)
        else:
            out = np.polynomial.polynomial.polyval(lam, self.coef)
        return float(out) if out.ndim == 0 else out


def _polynomial_fit(lams, values, degree: int) -> tuple[np.ndarray, float]:
    design = np.vander(lams, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    rss = float(np.sum((values - design @ coef) ** 2))
    return coef, rss


def _rational_init(lams, values) -> np.ndarray:
    """Quadratic-informed start: pin g3, solve g1 and g2 linearly."""
    g3 = float(np.max(lams)) + 1.0
    basis = np.column_stack([np.ones_like(lams), 1.0 / (g3 + lams)])
    lin, *_ = np.linalg.lstsq(basis, values, rcond=None)
    return np.array([lin[0], lin[1], g3])


def _rational_residuals(params, lams, values):
    g1, g2, g3 = params
    return values - (g1 + g2 / (g3 + lams))


def _rational_fit(
    lams, values, max_iter: int = 100, tol: float = 1e-10
) -> tuple[np.ndarray, float, bool]:
    params = _rational_init(lams, values)
    resid = _rational_residuals(params, lams, values)
    rss = float(resid @ resid)
    converged = False
    for _ in range(max_iter):
        g1, g2, g3 = params
        denom = g3 + lams
        jac = np.column_stack(
            [np.ones_like(lams), 1.0 / denom, -g2 / denom**2]
        )
        step, *_ = np.linalg.lstsq(jac, resid, rcond=None)
        # step halving until the residual sum of squares decreases
        scale = 1.0
        for _ in range(30):
            trial = params + scale * step
            if np.min(np.abs(trial[2] + lams)) < 1e-8:
                scale /= 2.0
                continue
            trial_resid = _rational_residuals(trial, lams, values)
            trial_rss = float(trial_resid @ trial_resid)
            if trial_rss <= rss:
                break
            scale /= 2.0
        else:
            converged = True  # no improving step left; treat as converged
            break
        moved = float(np.max(np.abs(trial - params)))
        params, resid, rss = trial, trial_resid, trial_rss
        if moved <= tol:
            converged = True
            break
    return params, rss, converged


def fit_extrapolant(
    lams: np.ndarray, values: np.ndarray, kind: str = "quadratic"
) -> ExtrapolantFit:
    """Fit an extrapolant of the given kind to (lambda, value) points."""
    if kind not in _N_PARAMS:
        raise ValueError(f"unknown extrapolant kind {kind!r}")
    lams = np.asarray(lams, dtype=float)
    values = np.asarray(values, dtype=float)
    if lams.shape != values.shape or lams.ndim != 1:
        raise ValueError("lambda and value vectors must match")
    if np.unique(lams).size != lams.size:
        raise ValueError("lambda values must be distinct")
    if lams.size < _N_PARAMS[kind]:
        raise ExtrapolationError(
            f"{kind} extrapolant needs at least {_N_PARAMS[kind]} points"
        )
    lam_max = float(np.max(lams))
    if kind == "linear":
        coef, rss = _polynomial_fit(lams, values, 1)
        return ExtrapolantFit("linear", coef, rss, True, lam_max)
    if kind == "quadratic":
        coef, rss = _polynomial_fit(lams, values, 2)
        return ExtrapolantFit("quadratic", coef, rss, True, lam_max)
    coef, rss, converged = _rational_fit(lams, values)
    g3 = coef[2]
    # pole at lambda = -g3 must stay outside [-1, max lambda]
    if -lam_max <= g3 <= 1.0:
        raise ExtrapolationError("extrapolant pole")
    return ExtrapolantFit("rational", coef, rss, converged, lam_max)
