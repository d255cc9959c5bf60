"""Error-free estimators wrapped by the SIMEX engine.

Each estimator maps (y, x, z) to a coefficient vector and optionally
provides a model-based variance estimate used by the SIMEX variance
extrapolation. x is the scalar error-prone covariate (possibly remeasured);
z holds the clean covariates.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .exceptions import ConvergenceError, SeparationError

_COEF_NORM_CAP = 1e3


def fourth_moment(x: np.ndarray) -> float:
    """Arithmetic mean of fourth powers."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("fourth_moment requires a non-empty vector")
    sq = x * x
    return float(np.mean(sq * sq))


def fourth_moment_variance(x: np.ndarray) -> float:
    """Variance of the fourth-moment estimate: sample var of x^4 over n."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise ValueError("fourth_moment_variance requires at least two points")
    return float(np.var(x**4, ddof=1) / x.size)


def logistic_fit(
    y: np.ndarray,
    design: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 50,
) -> np.ndarray:
    """Maximum-likelihood logistic coefficients via Newton / IRLS.

    Converges when the score X'(y - p) has max-norm <= tol. Raises
    SeparationError when the coefficient norm exceeds a cap (diverging fit)
    and ConvergenceError when the iteration budget is exhausted.
    """
    y = np.asarray(y, dtype=float)
    design = np.asarray(design, dtype=float)
    n, d = design.shape
    if y.shape != (n,):
        raise ValueError("y must match the design row count")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("y must be binary")
    beta = np.zeros(d)
    for _ in range(max_iter):
        p = expit(design @ beta)
        score = design.T @ (y - p)
        if np.max(np.abs(score)) <= tol:
            # every fitted probability saturated at its label means the
            # likelihood is still improving along a divergent direction
            if np.max(np.minimum(p, 1.0 - p)) < 1e-6:
                raise SeparationError("separation")
            return beta
        w = p * (1.0 - p)
        # clip to keep the information matrix invertible near saturation
        w = np.maximum(w, 1e-12)
        info = design.T @ (design * w[:, None])
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError as exc:
            raise SeparationError("separation") from exc
        beta = beta + step
        if np.linalg.norm(beta) > _COEF_NORM_CAP:
            raise SeparationError("separation")
    raise ConvergenceError("no convergence")


def logistic_variance(beta: np.ndarray, design: np.ndarray) -> np.ndarray:
    """Inverse Fisher information at the fitted coefficients."""
    design = np.asarray(design, dtype=float)
    p = expit(design @ np.asarray(beta, dtype=float))
    w = p * (1.0 - p)
    info = design.T @ (design * w[:, None])
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise SeparationError("singular information matrix") from exc
    # symmetrize against round-off
    return (cov + cov.T) / 2.0


class FourthMomentEstimator:
    """Plug-in estimator of E[X^4]; single coordinate, closed-form variance."""

    name = "fourth_moment"
    has_variance = True

    def fit(self, y, x, z) -> np.ndarray:
        return np.array([fourth_moment(x)])

    def variance(self, y, x, z, coef) -> np.ndarray:
        return np.array([[fourth_moment_variance(x)]])


class LogisticEstimator:
    """Logistic regression of y on (intercept, x, z columns)."""

    name = "logistic"
    has_variance = True

    def __init__(self, include_intercept: bool = True, tol: float = 1e-8,
                 max_iter: int = 50):
        self.include_intercept = include_intercept
        self.tol = tol
        self.max_iter = max_iter

    def design(self, x, z) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        cols = [np.asarray(z, dtype=float)] if z is not None and z.size else []
        parts = [x[:, None]] + cols
        if self.include_intercept:
            parts.insert(0, np.ones((x.size, 1)))
        return np.hstack(parts)

    def fit(self, y, x, z) -> np.ndarray:
        if y is None:
            raise ValueError("logistic estimator requires an outcome")
        return logistic_fit(y, self.design(x, z), self.tol, self.max_iter)

    def variance(self, y, x, z, coef) -> np.ndarray:
        return logistic_variance(coef, self.design(x, z))


_ESTIMATORS = {
    "fourth_moment": FourthMomentEstimator,
    "logistic": LogisticEstimator,
}


def make_estimator(name: str):
    """Estimator registry lookup used by scenarios and the CLI."""
    try:
        return _ESTIMATORS[name]()
    except KeyError:
        raise ValueError(f"unknown estimator {name!r}") from None
