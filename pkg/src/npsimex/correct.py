"""Measurement-error correction for user-supplied CSV data.

Reads the data (and optional validation) files, runs the configured
methods, and emits a JSON result document plus the extrapolation-trace and
error-set Q-Q CSVs used for diagnostic plotting.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.stats import kurtosis, norm, skew

from .data import (
    ObservedData,
    ValidationPairs,
    contrast_for,
    error_set_from_replicates,
    error_set_from_validation,
    estimate_sigma2,
    estimate_sigma2_from_validation,
    estimate_sigma2_pooled,
)
from .engine import export_trace_csv, naive_estimate, run_simex
from .estimators import make_estimator
from .exceptions import ConfigurationError, MethodFailureError
from .extrapolation import LambdaGrid
from .io import read_observed_csv, read_validation_csv
from .scenarios import _simex_procedure  # reuse of the closure is intentional
from .streams import RandomStream
from .variance import BootstrapSpec, bootstrap_ci

RESULT_SCHEMA_VERSION = 1

_DEFAULTS = {
    "estimator": "logistic",
    "methods": ["naive", "P", "NP"],
    "grid_size": 10,
    "p_grid_max": 2.0,
    "B": 100,
    "extrapolant": "quadratic",
    "seed": 20260823,
    "bootstrap": None,
    "sigma2_override": None,
}


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    unknown = set(raw) - set(_DEFAULTS)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    cfg = dict(_DEFAULTS)
    cfg.update(raw)
    if cfg["estimator"] not in ("logistic", "fourth_moment"):
        raise ConfigurationError(f"unknown estimator {cfg['estimator']!r}")
    for method in cfg["methods"]:
        if method not in ("naive", "P", "NP"):
            raise ConfigurationError(f"unknown method {method!r}")
    if cfg["extrapolant"] not in ("linear", "quadratic", "rational"):
        raise ConfigurationError(f"unknown extrapolant {cfg['extrapolant']!r}")
    return cfg


def error_set_summary(
    data: ObservedData, validation: ValidationPairs | None
) -> tuple[dict, np.ndarray]:
    """Summary statistics of the empirical error set, plus its values."""
    if validation is not None:
        errors = error_set_from_validation(validation).values
        sigma_u = float(np.std(errors, ddof=1))
        sigma_x = float(np.std(validation.x_true, ddof=1))
        provenance = f"validation ({validation.flavor})"
    else:
        x_tilde, eset = error_set_from_replicates(
            data.x_star, contrast_for(data.k)
        )
        errors = eset.values
        sigma_u = float(np.sqrt(estimate_sigma2_pooled(data.x_star)))
        # proxy variance minus contrast-error variance approximates var(X)
        var_x = float(np.var(x_tilde, ddof=1) - np.var(errors, ddof=1))
        sigma_x = float(np.sqrt(var_x)) if var_x > 0 else float("nan")
        provenance = f"replicates (k={data.k})"
    summary = {
        "n_errors": int(errors.size),
        "provenance": provenance,
        "mean": float(np.mean(errors)),
        "sd": float(np.std(errors, ddof=1)),
        "skewness": float(skew(errors)),
        "excess_kurtosis": float(kurtosis(errors)),  # Fisher definition
        "sigma_u": sigma_u,
        "sigma_x": sigma_x,
        "sigma_ratio": sigma_u / sigma_x if sigma_x > 0 else float("nan"),
    }
    return summary, errors


def _write_qq_csv(errors: np.ndarray, path) -> None:
    """Normal Q-Q data: theoretical quantile vs sorted standardized error."""
    n = errors.size
    ordered = np.sort(errors)
    standardized = (ordered - errors.mean()) / errors.std(ddof=1)
    theoretical = norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("theoretical_quantile,sample_quantile\n")
        for t, s in zip(theoretical, standardized):
            fh.write(f"{t:.10g},{s:.10g}\n")


def correct(
    data_path,
    config_path,
    validation_path=None,
    seed: int | None = None,
    out_dir=None,
) -> dict:
    """Run the configured correction workflow; return the result document."""
    cfg = load_config(config_path)
    if seed is not None:
        cfg["seed"] = seed
    estimator = make_estimator(cfg["estimator"])
    data = read_observed_csv(
        data_path, require_y=cfg["estimator"] == "logistic"
    )
    validation = (
        read_validation_csv(validation_path) if validation_path else None
    )

    needs_errors = any(m in cfg["methods"] for m in ("P", "NP"))
    if needs_errors and validation is None and data.k < 2:
        raise ConfigurationError(
            "P/NP correction needs replicate columns (x1..xk) or a "
            "validation file"
        )

    summary, errors = (
        error_set_summary(data, validation) if needs_errors else ({}, None)
    )
    stream = RandomStream(cfg["seed"])

    class _Shim:
        """Adapter so the scenario bootstrap closure sees config values."""

        grid_size = cfg["grid_size"]
        p_grid_max = cfg["p_grid_max"]
        B = cfg["B"]
        extrapolant = cfg["extrapolant"]
        sigma2_override = cfg["sigma2_override"]

    results = {}
    traces = []
    for method in cfg["methods"]:
        if method == "naive":
            res = naive_estimate(data, estimator, validation)
        else:
            grid = (
                LambdaGrid.parametric(cfg["p_grid_max"], cfg["grid_size"])
                if method == "P"
                else LambdaGrid.nonparametric(cfg["grid_size"])
            )
            res = run_simex(
                data,
                estimator,
                method,
                stream.derive(method),
                validation=validation,
                grid=grid,
                B=cfg["B"],
                extrapolant=cfg["extrapolant"],
                sigma2_override=(
                    cfg["sigma2_override"] if method == "P" else None
                ),
            )
        entry = {"estimate": res.estimate.tolist()}
        if cfg["bootstrap"] is not None:
            spec = BootstrapSpec(**cfg["bootstrap"])
            if method == "naive":
                def procedure(d, v, s):
                    return naive_estimate(d, estimator, v).estimate
            else:
                procedure = _simex_procedure(_Shim, estimator, method)
            try:
                intervals, _, n_failed = bootstrap_ci(
                    data,
                    procedure,
                    spec,
                    stream.derive("bootstrap", method),
                    validation=validation,
                    point=res.estimate,
                )
                width = intervals[:, 1] - intervals[:, 0]
                z = norm.ppf(0.5 + spec.level / 2.0)
                entry["interval"] = intervals.tolist()
                entry["interval_level"] = spec.level
                entry["interval_method"] = "bias-corrected percentile"
                entry["se"] = (width / (2.0 * z)).tolist()
                entry["bootstrap_failures"] = n_failed
            except MethodFailureError as exc:
                entry["bootstrap_error"] = str(exc)
        results[method] = entry
        traces.append(res)

    doc = {
        "schema_version": RESULT_SCHEMA_VERSION,
        "config": cfg,
        "n": data.n,
        "replicates": data.k,
        "error_set_summary": summary,
        "results": results,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "result.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        export_trace_csv(traces, out / "trace.csv")
        if errors is not None:
            _write_qq_csv(errors, out / "qq.csv")
    return doc
