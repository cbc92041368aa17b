import argparse
import logging
from pathlib import Path
from typing import Dict, Optional

import pandas as pd
from pydantic import ValidationError

from sav_bottleneck.core.config import Settings, settings
from sav_bottleneck.core.errors import (
    ConfigError,
    GridTooNarrowError,
    NoSuchEquilibriumError,
    NumericalFailure,
    ParameterValidationError,
)
from sav_bottleneck.io_utils import load_scenario, write_csv, write_summary
from sav_bottleneck.schemas.scenario import ScenarioConfig
from sav_bottleneck.services.oracle_suite import BASE_PARAMS, run_oracle_suite
from sav_bottleneck.services.scenario_service import ScenarioService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

SCENARIO_COMMANDS = (
    "equilibrium",
    "profile",
    "stability",
    "firstbest",
    "secondbest",
    "welfare",
    "paradox",
    "strategy",
)

LOG_FORMAT = "level=%(levelname)s logger=%(name)s msg=%(message)s"


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT, force=True)


def _settings_for(args: argparse.Namespace, scenario: Optional[ScenarioConfig]) -> Settings:
    update: Dict[str, object] = {"sweep_threads": args.threads}
    if scenario is not None:
        update["seed"] = scenario.seed
        if scenario.tol is not None:
            update["threshold_tol"] = scenario.tol
    if args.tol is not None:
        update["threshold_tol"] = args.tol
    return settings.model_copy(update=update)


def _write_outputs(
    out_dir: Path,
    command: str,
    scenario: ScenarioConfig,
    tables: Dict[str, pd.DataFrame],
    summary: Dict[str, object],
) -> None:
    extra = {"scenario": scenario.name, "command": command}
    for name, frame in tables.items():
        path = write_csv(frame, out_dir / f"{command}_{name}.csv", scenario.params, extra)
        logger.info("wrote %s rows=%d", path, len(frame))
    payload = {"scenario": scenario.name, "command": command, "derived_choices": scenario.derived_choices, **summary}
    path = write_summary(payload, out_dir / "summary.json")
    logger.info("wrote %s", path)


def _run_verify(args: argparse.Namespace) -> int:
    cfg = _settings_for(args, None)
    report = run_oracle_suite(cfg, seed=args.seed, quick=args.quick)
    out_dir = Path(args.out)
    frame = pd.DataFrame([c.model_dump() for c in report.checks])
    # the header echoes the reference scenario the suite checks exactly
    extra = {"command": "verify", "seed": report.seed, "quick": report.quick}
    write_csv(frame, out_dir / "verify_checks.csv", BASE_PARAMS, extra)
    summary = {
        "command": "verify",
        "seed": report.seed,
        "quick": report.quick,
        "passed": report.passed,
        "failed": report.failed,
        "threshold_tol": cfg.threshold_tol,
    }
    write_summary(summary, out_dir / "summary.json")
    for check in report.checks:
        print(f"{check.name}: {'PASS' if check.passed else 'FAIL'} worst={check.worst:.3g} ({check.elapsed:.2f}s)")
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def _run_scenario(args: argparse.Namespace) -> int:
    if not args.config:
        raise ConfigError(f"`{args.command}` needs --config <path>")
    scenario = load_scenario(args.config)
    service = ScenarioService(_settings_for(args, scenario))
    tables, summary = getattr(service, args.command)(scenario)
    _write_outputs(Path(args.out), args.command, scenario, tables, summary)
    print(f"Wrote {len(tables)} table(s) for `{args.command}` on scenario {scenario.name} to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Scenario JSON file (flat key-value object).")
    common.add_argument("--out", default="output", help="Directory for CSV and summary.json outputs.")
    common.add_argument("--threads", type=int, default=1, help="Worker threads for sweeps.")
    common.add_argument("--tol", type=float, default=None, help="Override the knife-edge tolerance.")
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")

    parser = argparse.ArgumentParser(
        prog="sav-bottleneck",
        description="Solve SAV/NV bottleneck equilibria, optima and dynamics for a scenario.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIO_COMMANDS:
        sub.add_parser(name, parents=[common], help=f"Run the {name} analysis on a scenario config.")
    verify = sub.add_parser("verify", parents=[common], help="Run the oracle suite; exit 2 on any failure.")
    verify.add_argument("--quick", action="store_true", help="Smaller batches for a fast smoke run.")
    verify.add_argument("--seed", type=int, default=None, help="Seed for the random parameter draws.")
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    if args.threads < 1:
        logger.error("--threads must be at least 1")
        return EXIT_CONFIG

    try:
        if args.command == "verify":
            return _run_verify(args)
        return _run_scenario(args)
    except (ConfigError, ParameterValidationError, ValidationError, FileNotFoundError) as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    except (NumericalFailure, NoSuchEquilibriumError, GridTooNarrowError) as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
