"""Declarative Monte Carlo scenarios and the simulation harness.

A ScenarioSpec describes a generative model, an error process, the methods
to run, and the engine settings. run_scenario executes the requested number
of Monte Carlo repetitions (optionally across worker processes, with
rep-keyed substreams so the worker count never changes the results) and
aggregates MSE, relative MSE, bias, median, and coverage.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from .data import ObservedData, ValidationPairs
from .distributions import DistributionSpec, sample
from .engine import naive_estimate, run_simex
from .estimators import make_estimator
from .exceptions import ConfigurationError, MethodFailureError
from .extrapolation import LambdaGrid
from .metrics import MethodMetrics, MetricsReport, compute_coverage, compute_mse
from .streams import RandomStream
from .variance import BootstrapSpec, bootstrap_ci, simex_variance

_VALID_METHODS = ("naive", "P", "NP", "truth")
_MAX_REP_FAILURE_FRACTION = 0.1


def _dist_to_config(spec: DistributionSpec | None):
    if spec is None:
        return None
    if spec.kind == "empirical":
        raise ConfigurationError("empirical distributions cannot appear in configs")
    return spec.to_dict()


def dist_from_config(cfg: dict) -> DistributionSpec:
    """Rebuild a DistributionSpec from its config/JSON form."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    if kind is None:
        raise ConfigurationError("distribution config needs a 'kind'")
    builders = {
        "normal": DistributionSpec.normal,
        "student_t": DistributionSpec.student_t,
        "laplace": DistributionSpec.laplace,
        "gamma": DistributionSpec.gamma,
        "contaminated_normal": DistributionSpec.contaminated_normal,
    }
    if kind not in builders:
        raise ConfigurationError(f"unknown distribution kind {kind!r}")
    try:
        return builders[kind](**cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad {kind} parameters: {exc}") from exc


@dataclass(frozen=True)
class ScenarioSpec:
    """One declarative Monte Carlo experiment."""

    name: str
    estimator: str  # "fourth_moment" or "logistic"
    n: int
    reps: int
    x_dist: DistributionSpec
    error_dist: DistributionSpec
    beta: tuple[float, ...] | None = None  # logistic truth (intercept, x, z...)
    z_dim: int = 0
    z_dist: DistributionSpec | None = None
    replicates: int = 0  # k >= 2 for replicate mode; 0 means validation mode
    validation_fraction: float = 0.0
    methods: tuple[str, ...] = ("naive", "P", "NP", "truth")
    grid_size: int = 10
    p_grid_max: float = 2.0
    B: int = 100
    extrapolant: str = "quadratic"
    seed: int = 20260823
    bootstrap: BootstrapSpec | None = None
    variance_method: bool = False
    nominal_levels: tuple[float, ...] = (0.95,)
    sigma2_override: float | None = None

    def __post_init__(self) -> None:
        if self.estimator not in ("fourth_moment", "logistic"):
            raise ConfigurationError(f"unknown estimator {self.estimator!r}")
        if self.estimator == "logistic" and self.beta is None:
            raise ConfigurationError("logistic scenarios need true beta")
        if self.n < 2 or self.reps < 1:
            raise ConfigurationError("n and reps must be positive")
        for m in self.methods:
            if m not in _VALID_METHODS:
                raise ConfigurationError(f"unknown method {m!r}")
        if self.replicates == 0:
            if not 0.0 < self.validation_fraction <= 1.0:
                raise ConfigurationError(
                    "validation_fraction must be in (0, 1] when no replicates"
                )
        elif self.replicates < 2:
            raise ConfigurationError("replicates must be 0 or >= 2")
        if self.z_dim > 0 and self.z_dist is None:
            raise ConfigurationError("z_dim > 0 requires z_dist")

    def true_params(self) -> list[float]:
        if self.estimator == "logistic":
            return [float(b) for b in self.beta]
        if self.x_dist.kind == "normal":
            mu = self.x_dist.params["mean"]
            s2 = self.x_dist.params["sd"] ** 2
            return [mu**4 + 6 * mu**2 * s2 + 3 * s2**2]
        raise ConfigurationError(
            "fourth-moment truth only available for normal x_dist"
        )

    def replace(self, **kw) -> "ScenarioSpec":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "estimator": self.estimator,
            "n": self.n,
            "reps": self.reps,
            "x_dist": _dist_to_config(self.x_dist),
            "error_dist": _dist_to_config(self.error_dist),
            "beta": list(self.beta) if self.beta is not None else None,
            "z_dim": self.z_dim,
            "z_dist": _dist_to_config(self.z_dist),
            "replicates": self.replicates,
            "validation_fraction": self.validation_fraction,
            "methods": list(self.methods),
            "grid_size": self.grid_size,
            "p_grid_max": self.p_grid_max,
            "B": self.B,
            "extrapolant": self.extrapolant,
            "seed": self.seed,
            "bootstrap": (
                None
                if self.bootstrap is None
                else {
                    "n_boot": self.bootstrap.n_boot,
                    "level": self.bootstrap.level,
                    "method": self.bootstrap.method,
                }
            ),
            "variance_method": self.variance_method,
            "nominal_levels": list(self.nominal_levels),
            "sigma2_override": self.sigma2_override,
        }

    @classmethod
    def from_dict(cls, cfg: dict) -> "ScenarioSpec":
        cfg = dict(cfg)
        try:
            for key in ("x_dist", "error_dist", "z_dist"):
                if cfg.get(key) is not None:
                    cfg[key] = dist_from_config(cfg[key])
            if cfg.get("bootstrap") is not None:
                cfg["bootstrap"] = BootstrapSpec(**cfg["bootstrap"])
            for key in ("beta", "methods", "nominal_levels"):
                if cfg.get(key) is not None:
                    cfg[key] = tuple(cfg[key])
            return cls(**cfg)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad scenario config: {exc}") from exc


def generate_dataset(spec: ScenarioSpec, stream: RandomStream):
    """Draw one dataset: (data, validation_or_None, x_true)."""
    n = spec.n
    x = sample(spec.x_dist, n, stream.derive("x"))
    z = None
    if spec.z_dim > 0:
        z = np.column_stack(
            [
                sample(spec.z_dist, n, stream.derive("z", j))
                for j in range(spec.z_dim)
            ]
        )
    y = None
    if spec.estimator == "logistic":
        beta = np.asarray(spec.beta, dtype=float)
        eta = beta[0] + beta[1] * x
        if z is not None:
            eta = eta + z @ beta[2:]
        y = (stream.derive("y").generator.random(n) < expit(eta)).astype(float)
    if spec.replicates >= 2:
        cols = [
            x + sample(spec.error_dist, n, stream.derive("u", j))
            for j in range(spec.replicates)
        ]
        data = ObservedData(y, np.column_stack(cols), z)
        return data, None, x
    u = sample(spec.error_dist, n, stream.derive("u", 0))
    x_star = x + u
    n1 = int(round(spec.validation_fraction * n))
    if n1 < 2:
        raise ConfigurationError("validation sample must contain at least 2 rows")
    validation = ValidationPairs(x[:n1], x_star[:n1], flavor="internal")
    data = ObservedData(y, x_star[:, None], z)
    return data, validation, x


def _grid_for(spec: ScenarioSpec, method: str) -> LambdaGrid:
    if method == "P":
        return LambdaGrid.parametric(spec.p_grid_max, spec.grid_size)
    return LambdaGrid.nonparametric(spec.grid_size)


def _simex_procedure(spec: ScenarioSpec, estimator, method: str):
    """Full-analysis closure re-run on every bootstrap resample."""

    def procedure(data, validation, stream):
        return run_simex(
            data,
            estimator,
            method,
            stream,
            validation=validation,
            grid=_grid_for(spec, method),
            B=spec.B,
            extrapolant=spec.extrapolant,
            sigma2_override=spec.sigma2_override if method == "P" else None,
        ).estimate

    return procedure


def run_rep(spec: ScenarioSpec, rep: int) -> dict:
    """One Monte Carlo repetition; returns estimates and intervals per method."""
    root = RandomStream(spec.seed).derive("rep", rep)
    data, validation, x_true = generate_dataset(spec, root.derive("gen"))
    estimator = make_estimator(spec.estimator)
    out: dict = {"rep": rep, "estimates": {}, "intervals": {}, "errors": {}}
    for method in spec.methods:
        try:
            if method == "truth":
                coef = np.asarray(
                    estimator.fit(data.y, x_true, data.z), dtype=float
                )
            elif method == "naive":
                coef = naive_estimate(data, estimator, validation).estimate
            else:
                result = run_simex(
                    data,
                    estimator,
                    method,
                    root.derive(method),
                    validation=validation,
                    grid=_grid_for(spec, method),
                    B=spec.B,
                    extrapolant=spec.extrapolant,
                    sigma2_override=(
                        spec.sigma2_override if method == "P" else None
                    ),
                    keep_variances=spec.variance_method and method == "NP",
                )
                coef = result.estimate
                if spec.variance_method and method == "NP":
                    report = simex_variance(result.trace, spec.extrapolant)
                    ivals = {}
                    for level in spec.nominal_levels:
                        var = report.var_npsimex_hat
                        if np.any(var < 0):
                            continue
                        half = norm.ppf(0.5 + level / 2.0) * np.sqrt(var)
                        ivals[f"{level:g}"] = np.column_stack(
                            [coef - half, coef + half]
                        )
                    out["intervals"].setdefault(method, {}).update(ivals)
            out["estimates"][method] = coef
            if spec.bootstrap is not None and method in ("P", "NP"):
                procedure = _simex_procedure(spec, estimator, method)
                intervals, _, _ = bootstrap_ci(
                    data,
                    procedure,
                    spec.bootstrap,
                    root.derive("bootstrap", method),
                    validation=validation,
                    point=coef,
                )
                out["intervals"].setdefault(method, {})[
                    f"{spec.bootstrap.level:g}"
                ] = intervals
        except MethodFailureError as exc:
            out["errors"][method] = str(exc)
    return out


def _rep_worker(args) -> dict:
    spec, rep = args
    return run_rep(spec, rep)


def run_scenario(spec: ScenarioSpec, workers: int = 1) -> MetricsReport:
    """Execute all repetitions and aggregate the metrics."""
    reps = list(range(spec.reps))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_rep_worker, [(spec, r) for r in reps]))
    else:
        results = [run_rep(spec, r) for r in reps]
    results.sort(key=lambda r: r["rep"])
    return aggregate(spec, results)


def aggregate(spec: ScenarioSpec, results: list[dict]) -> MetricsReport:
    truth = spec.true_params()
    d = len(truth)
    methods: dict[str, MethodMetrics] = {}
    notes: list[str] = []

    truth_mse = None
    if "truth" in spec.methods:
        ests = np.vstack(
            [r["estimates"]["truth"] for r in results if "truth" in r["estimates"]]
        )
        truth_mse = [compute_mse(ests[:, j], truth[j]) for j in range(d)]

    for method in spec.methods:
        rows = [r["estimates"][method] for r in results if method in r["estimates"]]
        n_fail = sum(1 for r in results if method in r["errors"])
        if not rows:
            methods[method] = MethodMetrics(
                mse=[math.nan] * d,
                relative_mse=None,
                bias=[math.nan] * d,
                median=[math.nan] * d,
                n_reps_used=0,
                n_failures=n_fail,
                invalid=True,
            )
            notes.append(f"method {method}: all repetitions failed")
            continue
        ests = np.vstack(rows)
        mse = [compute_mse(ests[:, j], truth[j]) for j in range(d)]
        rel = (
            [m / t if t > 0 else math.nan for m, t in zip(mse, truth_mse)]
            if truth_mse is not None
            else None
        )
        bias = [float(np.mean(ests[:, j]) - truth[j]) for j in range(d)]
        median = [float(np.median(ests[:, j])) for j in range(d)]
        coverage: dict[str, list[float]] = {}
        level_keys = sorted(
            {
                key
                for r in results
                for key in r["intervals"].get(method, {})
            }
        )
        for key in level_keys:
            per_rep = [
                r["intervals"][method][key]
                for r in results
                if key in r["intervals"].get(method, {})
            ]
            coverage[key] = [
                compute_coverage(
                    np.vstack([iv[j][None, :] for iv in per_rep]), truth[j]
                )
                for j in range(d)
            ]
        invalid = n_fail > _MAX_REP_FAILURE_FRACTION * spec.reps
        if invalid:
            notes.append(
                f"method {method}: {n_fail} of {spec.reps} repetitions failed; "
                "results marked invalid"
            )
        methods[method] = MethodMetrics(
            mse=mse,
            relative_mse=rel,
            bias=bias,
            median=median,
            coverage=coverage,
            n_reps_used=ests.shape[0],
            n_failures=n_fail,
            invalid=invalid,
        )
    return MetricsReport(
        scenario=spec.to_dict(),
        true_params=truth,
        methods=methods,
        notes=notes,
    )


# -- built-in scenario registry ---------------------------------------------


def _table1(df: float) -> ScenarioSpec:
    return ScenarioSpec(
        name=f"table1_df{df:g}",
        estimator="logistic",
        n=5000,
        reps=200,
        x_dist=DistributionSpec.normal(1.0, math.sqrt(2.0)),
        error_dist=DistributionSpec.student_t(df),
        beta=(1.0, -1.0),
        replicates=2,
        B=100,
        grid_size=10,
        extrapolant="rational",
        bootstrap=BootstrapSpec(n_boot=500, level=0.95),
    )


def _table2(n: int = 5000) -> ScenarioSpec:
    return ScenarioSpec(
        name="table2",
        estimator="fourth_moment",
        n=n,
        reps=1000,
        x_dist=DistributionSpec.normal(5.0, 2.0),
        error_dist=DistributionSpec.student_t(5.0),
        replicates=2,
        B=500,
        grid_size=10,
        extrapolant="quadratic",
    )


def _table3(
    n: int = 10000, fraction: float = 0.05, ratio: float = 0.5
) -> ScenarioSpec:
    sigma_x = 2.0  # sd of Gamma(shape 1, scale 2)
    laplace_scale = ratio * sigma_x / math.sqrt(2.0)
    return ScenarioSpec(
        name="table3",
        estimator="logistic",
        n=n,
        reps=1000,
        x_dist=DistributionSpec.gamma(1.0, 2.0),
        error_dist=DistributionSpec.laplace(0.0, laplace_scale),
        beta=(1.0, -1.0),
        validation_fraction=fraction,
        B=100,
        grid_size=10,
        extrapolant="rational",
    )


def _table3b() -> ScenarioSpec:
    return _table3(n=1000, fraction=0.05, ratio=2.0).replace(name="table3b")


def _app1(rho: float = 0.5, replicates: int = 3) -> ScenarioSpec:
    return ScenarioSpec(
        name=f"app1_rho{rho:g}",
        estimator="fourth_moment",
        n=15000,
        reps=1000,
        x_dist=DistributionSpec.normal(5.0, 2.0),
        error_dist=DistributionSpec.contaminated_normal(rho, 1.0, 5.0),
        replicates=replicates,
        B=500,
        grid_size=10,
        extrapolant="quadratic",
    )


def _app2(n: int = 5000) -> ScenarioSpec:
    return _table2(n).replace(
        name="app2",
        methods=("NP", "truth"),
        variance_method=True,
        nominal_levels=(0.9, 0.95, 0.99),
    )


def _app3() -> ScenarioSpec:
    return ScenarioSpec(
        name="app3",
        estimator="logistic",
        n=100000,
        reps=1000,
        x_dist=DistributionSpec.gamma(2.0, 1.0),
        error_dist=DistributionSpec.gamma(1.0, 1.5, centered=True),
        beta=(2.5, -1.25, 1.0),
        z_dim=1,
        z_dist=DistributionSpec.normal(0.0, 1.0),
        validation_fraction=0.05,
        B=200,
        grid_size=10,
        extrapolant="rational",
    )


BUILTIN_SCENARIOS = {
    "table1": lambda: _table1(3.0).replace(name="table1"),
    "table1_df3": lambda: _table1(3.0),
    "table1_df4": lambda: _table1(4.0),
    "table1_df5": lambda: _table1(5.0),
    "table1_df10": lambda: _table1(10.0),
    "table1_df30": lambda: _table1(30.0),
    "table2": _table2,
    "table3": _table3,
    "table3b": _table3b,
    "app1_rho0": lambda: _app1(0.0),
    "app1_rho05": lambda: _app1(0.5),
    "app2": _app2,
    "app3": _app3,
}


def builtin_scenario(name: str) -> ScenarioSpec:
    try:
        return BUILTIN_SCENARIOS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown builtin scenario {name!r}") from None
