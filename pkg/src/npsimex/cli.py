"""Command-line interface.

Subcommands:
  simulate        run a built-in or file-defined Monte Carlo scenario
  correct         correct user-supplied CSV data for measurement error
  list-scenarios  print the names of the built-in scenarios

Exit codes: 0 success, 2 configuration error, 3 data error, 4 method
failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

from .correct import correct
from .exceptions import ConfigurationError, DataFormatError, MethodFailureError
from .scenarios import BUILTIN_SCENARIOS, ScenarioSpec, builtin_scenario, run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npsimex",
        description="Simulation extrapolation for additive measurement error.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    sim.add_argument(
        "--scenario",
        required=True,
        help="built-in scenario name or path to a scenario JSON file",
    )
    sim.add_argument("--n", type=int, help="override sample size")
    sim.add_argument("--reps", type=int, help="override Monte Carlo repetitions")
    sim.add_argument("--B", type=int, help="override SIMEX replicates")
    sim.add_argument("--grid-max", type=float, help="override parametric grid max")
    sim.add_argument(
        "--extrapolant", choices=["linear", "quadratic", "rational"]
    )
    sim.add_argument("--seed", type=int, help="override the root seed")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--no-bootstrap", action="store_true",
                     help="drop any bootstrap configured by the scenario")
    sim.add_argument("--out", type=Path, help="directory for report.json")
    sim.add_argument(
        "--reproducible",
        action="store_true",
        help="omit timestamps so identical runs emit identical reports",
    )

    cor = sub.add_parser("correct", help="correct user-supplied CSV data")
    cor.add_argument("--data", required=True, type=Path)
    cor.add_argument("--validation", type=Path)
    cor.add_argument("--config", required=True, type=Path)
    cor.add_argument("--seed", type=int)
    cor.add_argument("--out", type=Path)

    sub.add_parser("list-scenarios", help="list built-in scenario names")
    return parser


def _load_scenario(args) -> ScenarioSpec:
    if args.scenario in BUILTIN_SCENARIOS:
        spec = builtin_scenario(args.scenario)
    else:
        path = Path(args.scenario)
        if not path.exists():
            raise ConfigurationError(
                f"{args.scenario!r} is neither a builtin scenario nor a file"
            )
        try:
            with open(path, encoding="utf-8") as fh:
                spec = ScenarioSpec.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"bad scenario file {path}: {exc}") from exc
    overrides = {}
    if args.n is not None:
        overrides["n"] = args.n
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.B is not None:
        overrides["B"] = args.B
    if args.grid_max is not None:
        overrides["p_grid_max"] = args.grid_max
    if args.extrapolant is not None:
        overrides["extrapolant"] = args.extrapolant
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.no_bootstrap:
        overrides["bootstrap"] = None
    return spec.replace(**overrides) if overrides else spec


def _cmd_simulate(args) -> int:
    spec = _load_scenario(args)
    report = run_scenario(spec, workers=args.workers)
    doc = report.to_dict()
    if not args.reproducible:
        doc["generated_at"] = datetime.datetime.now(
            datetime.timezone.utc
        ).isoformat()
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def _cmd_correct(args) -> int:
    doc = correct(
        args.data,
        args.config,
        validation_path=args.validation,
        seed=args.seed,
        out_dir=args.out,
    )
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "correct":
            return _cmd_correct(args)
        for name in sorted(BUILTIN_SCENARIOS):
            print(name)
        return 0
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except MethodFailureError as exc:
        print(f"method failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
