"""Distribution specifications and samplers for the simulation studies.

Covers every distribution used by the built-in scenarios: normal, Student-t,
Laplace, (optionally mean-centered) gamma, a two-component contaminated
normal scale mixture, and resampling from an empirical error set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .streams import RandomStream, as_generator

_KINDS = (
    "normal",
    "student_t",
    "laplace",
    "gamma",
    "contaminated_normal",
    "empirical",
)


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    """A validated (kind, parameters) pair; construct via the classmethods."""

    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        p = self.params
        if self.kind == "normal":
            if p["sd"] <= 0:
                raise ValueError("normal sd must be positive")
        elif self.kind == "student_t":
            if p["df"] <= 0:
                raise ValueError("student_t df must be positive")
        elif self.kind == "laplace":
            if p["scale"] <= 0:
                raise ValueError("laplace scale must be positive")
        elif self.kind == "gamma":
            if p["shape"] <= 0 or p["scale"] <= 0:
                raise ValueError("gamma shape and scale must be positive")
        elif self.kind == "contaminated_normal":
            if not 0.0 <= p["rho"] <= 1.0:
                raise ValueError("mixing probability rho must be in [0, 1]")
            if p["sd_base"] <= 0 or p["sd_inflated"] <= 0:
                raise ValueError("component sds must be positive")
        elif self.kind == "empirical":
            if len(p["values"]) == 0:
                raise ValueError("empty error set")

    # -- constructors -------------------------------------------------------

    @classmethod
    def normal(cls, mean: float = 0.0, sd: float = 1.0) -> "DistributionSpec":
        return cls("normal", {"mean": float(mean), "sd": float(sd)})

    @classmethod
    def student_t(cls, df: float) -> "DistributionSpec":
        return cls("student_t", {"df": float(df)})

    @classmethod
    def laplace(cls, loc: float = 0.0, scale: float = 1.0) -> "DistributionSpec":
        return cls("laplace", {"loc": float(loc), "scale": float(scale)})

    @classmethod
    def gamma(
        cls, shape: float, scale: float = 1.0, centered: bool = False
    ) -> "DistributionSpec":
        return cls(
            "gamma",
            {"shape": float(shape), "scale": float(scale), "centered": bool(centered)},
        )

    @classmethod
    def contaminated_normal(
        cls, rho: float, sd_base: float = 1.0, sd_inflated: float = 5.0
    ) -> "DistributionSpec":
        return cls(
            "contaminated_normal",
            {
                "rho": float(rho),
                "sd_base": float(sd_base),
                "sd_inflated": float(sd_inflated),
            },
        )

    @classmethod
    def empirical(cls, values) -> "DistributionSpec":
        # accepts a raw array or anything with a .values array (an ErrorSet)
        values = np.asarray(getattr(values, "values", values), dtype=float)
        return cls("empirical", {"values": values})

    # -- moments ------------------------------------------------------------

    def mean(self) -> float:
        p = self.params
        if self.kind == "normal":
            return p["mean"]
        if self.kind == "student_t":
            if p["df"] <= 1:
                raise ValueError("mean undefined for df <= 1")
            return 0.0
        if self.kind == "laplace":
            return p["loc"]
        if self.kind == "gamma":
            return 0.0 if p["centered"] else p["shape"] * p["scale"]
        if self.kind == "contaminated_normal":
            return 0.0
        return float(np.mean(p["values"]))

    def variance(self) -> float:
        p = self.params
        if self.kind == "normal":
            return p["sd"] ** 2
        if self.kind == "student_t":
            if p["df"] <= 2:
                raise ValueError("variance undefined for df <= 2")
            return p["df"] / (p["df"] - 2.0)
        if self.kind == "laplace":
            return 2.0 * p["scale"] ** 2
        if self.kind == "gamma":
            return p["shape"] * p["scale"] ** 2
        if self.kind == "contaminated_normal":
            rho = p["rho"]
            return (1.0 - rho) * p["sd_base"] ** 2 + rho * p["sd_inflated"] ** 2
        return float(np.var(p["values"]))

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for key, val in self.params.items():
            if key == "values":
                out["n_values"] = int(len(val))
            else:
                out[key] = val
        return out


def sample(
    spec: DistributionSpec, n: int, rng: RandomStream | np.random.Generator
) -> np.ndarray:
    """Draw n i.i.d. values from the specified distribution."""
    if n < 0:
        raise ValueError("sample size must be non-negative")
    g = as_generator(rng)
    p = spec.params
    if spec.kind == "normal":
        return g.normal(p["mean"], p["sd"], size=n)
    if spec.kind == "student_t":
        return g.standard_t(p["df"], size=n)
    if spec.kind == "laplace":
        return g.laplace(p["loc"], p["scale"], size=n)
    if spec.kind == "gamma":
        draws = g.gamma(p["shape"], p["scale"], size=n)
        if p["centered"]:
            draws -= p["shape"] * p["scale"]
        return draws
    if spec.kind == "contaminated_normal":
        z = g.standard_normal(n)
        inflated = g.random(n) < p["rho"]
        return z * np.where(inflated, p["sd_inflated"], p["sd_base"])
    if spec.kind == "empirical":
        values = p["values"]
        return values[g.integers(0, len(values), size=n)]
    raise AssertionError(f"unreachable kind {spec.kind}")
