"""Monte Carlo summary metrics: MSE, relative MSE, bias, coverage."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def compute_mse(estimates, truth: float) -> float:
    """Mean squared deviation of the estimates from the true value."""
    estimates = np.asarray(estimates, dtype=float)
    if estimates.size == 0:
        raise ValueError("compute_mse requires at least one estimate")
    return float(np.mean((estimates - truth) ** 2))


def compute_coverage(intervals, truth: float) -> float:
    """Fraction of [lo, hi] intervals containing the true value."""
    intervals = np.asarray(intervals, dtype=float)
    if intervals.ndim != 2 or intervals.shape[1] != 2 or intervals.shape[0] == 0:
        raise ValueError("intervals must be a non-empty array of (lo, hi) rows")
    lo, hi = intervals[:, 0], intervals[:, 1]
    if np.any(lo > hi):
        raise ValueError("malformed interval: lo > hi")
    return float(np.mean((lo <= truth) & (truth <= hi)))


@dataclass
class MethodMetrics:
    """Per-coordinate metrics for one method."""

    mse: list[float]
    relative_mse: list[float] | None
    bias: list[float]
    median: list[float]
    coverage: dict[str, list[float]] = field(default_factory=dict)
    n_reps_used: int = 0
    n_failures: int = 0
    invalid: bool = False

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "relative_mse": self.relative_mse,
            "bias": self.bias,
            "median": self.median,
            "coverage": self.coverage,
            "n_reps_used": self.n_reps_used,
            "n_failures": self.n_failures,
            "invalid": self.invalid,
        }


@dataclass
class MetricsReport:
    """Aggregated scenario results plus the configuration echo."""

    scenario: dict
    true_params: list[float]
    methods: dict[str, MethodMetrics]
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "true_params": self.true_params,
            "methods": {name: m.to_dict() for name, m in self.methods.items()},
            "notes": self.notes,
        }
