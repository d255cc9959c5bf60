"""Observed-data containers and construction of the empirical error set.

The error set is the collection of observed error realizations that the
nonparametric remeasurement step resamples from. It is built either from
validation data (residuals proxy - truth) or from replicate measurements
via a zero-sum contrast.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataFormatError

_CONTRAST_TOL = 1e-12


@dataclass(frozen=True)
class Contrast:
    """Replicate weights a with sum(a) = 0 and sum(|a|) = 1."""

    a: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float)
        object.__setattr__(self, "a", a)
        if a.ndim != 1 or a.size < 2:
            raise ValueError("contrast requires at least two replicates")
        if abs(a.sum()) > _CONTRAST_TOL:
            raise ValueError("contrast weights must sum to zero")
        if abs(np.abs(a).sum() - 1.0) > _CONTRAST_TOL:
            raise ValueError("contrast absolute weights must sum to one")

    @property
    def k(self) -> int:
        return self.a.size


@dataclass(frozen=True)
class ErrorSet:
    """Empirical error sample; resampled with replacement by NP remeasurement."""

    values: np.ndarray
    provenance: str = "validation"  # "validation" or "replicates"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("empty error set")

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ValidationPairs:
    """Paired true and proxy measurements from a validation (sub)sample."""

    x_true: np.ndarray
    x_star: np.ndarray
    flavor: str = "internal"  # "internal" or "external"; metadata only

    def __post_init__(self) -> None:
        x_true = np.asarray(self.x_true, dtype=float)
        x_star = np.asarray(self.x_star, dtype=float)
        object.__setattr__(self, "x_true", x_true)
        object.__setattr__(self, "x_star", x_star)
        if x_true.ndim != 1 or x_star.ndim != 1:
            raise ValueError("validation columns must be one-dimensional")
        if x_true.size != x_star.size:
            raise ValueError("validation columns must have equal length")
        if x_true.size < 2:
            raise ValueError("validation sample needs at least two pairs")
        if self.flavor not in ("internal", "external"):
            raise ValueError(f"unknown validation flavor {self.flavor!r}")

    @property
    def n(self) -> int:
        return self.x_true.size


@dataclass(frozen=True)
class ObservedData:
    """Outcome, proxy replicates, and error-free covariates.

    y may be None for estimators that do not use an outcome (e.g. moment
    estimation). x_star is always n x k, with constant replicate count k.
    z is n x p with p >= 0.
    """

    y: np.ndarray | None
    x_star: np.ndarray
    z: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        x_star = np.asarray(self.x_star, dtype=float)
        if x_star.ndim == 1:
            x_star = x_star[:, None]
        if x_star.ndim != 2 or x_star.shape[0] == 0:
            raise ValueError("x_star must be a non-empty n x k matrix")
        object.__setattr__(self, "x_star", x_star)
        n = x_star.shape[0]
        if self.y is not None:
            y = np.asarray(self.y, dtype=float)
            if y.shape != (n,):
                raise ValueError("y must be a length-n vector")
            object.__setattr__(self, "y", y)
        z = self.z
        if z is None:
            z = np.empty((n, 0))
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        if z.shape[0] != n:
            raise ValueError("z must have n rows")
        object.__setattr__(self, "z", z)
        if not (
            np.all(np.isfinite(x_star))
            and np.all(np.isfinite(z))
            and (self.y is None or np.all(np.isfinite(self.y)))
        ):
            raise ValueError("observed data must be finite and complete")

    @property
    def n(self) -> int:
        return self.x_star.shape[0]

    @property
    def k(self) -> int:
        return self.x_star.shape[1]


def contrast_for(k: int) -> Contrast:
    """The default contrast splitting k replicates into pseudo-truth and error.

    Even k: k/2 weights of 1/k and k/2 of -1/k. Odd k: (k+1)/2 weights of
    1/(k+1) and (k-1)/2 of -1/(k-1).
    """
    if k < 2:
        raise ValueError("contrast requires at least two replicates")
    if k % 2 == 0:
        a = np.concatenate([np.full(k // 2, 1.0 / k), np.full(k // 2, -1.0 / k)])
    else:
        a = np.concatenate(
            [
                np.full((k + 1) // 2, 1.0 / (k + 1)),
                np.full((k - 1) // 2, -1.0 / (k - 1)),
            ]
        )
    return Contrast(a)


def error_set_from_validation(v: ValidationPairs) -> ErrorSet:
    """Residuals proxy - truth from the validation pairs."""
    return ErrorSet(v.x_star - v.x_true, provenance="validation")


def error_set_from_replicates(
    x_star: np.ndarray, a: Contrast | None = None
) -> tuple[np.ndarray, ErrorSet]:
    """Split replicates into a pseudo-true proxy and contrast errors.

    Returns (x_tilde, error_set) with x_tilde_i = sum_j |a_j| x*_ij and
    error values sum_j a_j x*_ij. For k = 2 with the default contrast these
    are the row mean and the half-difference.
    """
    x_star = np.asarray(x_star, dtype=float)
    if x_star.ndim != 2:
        raise DataFormatError("replicate matrix must be n x k")
    k = x_star.shape[1]
    if a is None:
        a = contrast_for(k)
    if a.k != k:
        raise DataFormatError(
            f"contrast length {a.k} does not match replicate count {k}"
        )
    x_tilde = x_star @ np.abs(a.a)
    errors = x_star @ a.a
    return x_tilde, ErrorSet(errors, provenance="replicates")


def estimate_sigma2(x_star: np.ndarray) -> float:
    """Error-variance estimate from two replicates: (2n)^-1 sum (x1 - x2)^2."""
    x_star = np.asarray(x_star, dtype=float)
    if x_star.ndim != 2 or x_star.shape[1] != 2:
        raise DataFormatError("estimate_sigma2 requires exactly two replicates")
    if x_star.shape[0] < 1:
        raise DataFormatError("estimate_sigma2 requires at least one row")
    diffs = x_star[:, 0] - x_star[:, 1]
    return float(np.sum(diffs**2) / (2.0 * x_star.shape[0]))


def estimate_sigma2_pooled(x_star: np.ndarray) -> float:
    """General-k error variance: within-row variance pooled over all rows.

    sum_ij (x*_ij - xbar*_i)^2 / (n (k - 1)); reduces to estimate_sigma2
    at k = 2.
    """
    x_star = np.asarray(x_star, dtype=float)
    if x_star.ndim != 2 or x_star.shape[1] < 2:
        raise DataFormatError("pooled variance requires at least two replicates")
    n, k = x_star.shape
    centered = x_star - x_star.mean(axis=1, keepdims=True)
    return float(np.sum(centered**2) / (n * (k - 1)))


def estimate_sigma2_from_validation(v: ValidationPairs) -> float:
    """Sample variance (divisor n1 - 1) of the validation residuals."""
    residuals = error_set_from_validation(v).values
    return float(np.var(residuals, ddof=1))
