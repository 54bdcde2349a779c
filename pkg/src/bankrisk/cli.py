"""Command-line entry point.

Commands:
    run       one seeded run, written as timeseries/bank panel/events/summary
    ensemble  Monte Carlo over consecutive seeds
    sweep     one ensemble per value of a config parameter
    validate  parse the configuration and print the effective values
    curve     attitude probabilities of one behaviour over a return grid

Exit codes: 0 success, 1 configuration error, 2 simulation error,
3 output error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from collections.abc import Sequence
from typing import Any

import numpy as np
import yaml

from bankrisk import __version__
from bankrisk.config import SimConfig, config_hash, parse_config, parse_overrides
from bankrisk.engine import run
from bankrisk.ensemble import monte_carlo, sweep
from bankrisk.errors import BankRiskError, ConfigError, OutputError, SimulationError
from bankrisk.market import response_curve, waiting_mode
from bankrisk.metrics import a0_for_alpha
from bankrisk.output import (
    resolve_output_dir,
    write_ensemble_outputs,
    write_outputs,
    write_sweep_outputs,
)
from bankrisk.types import BankBehavior

logger = logging.getLogger("bankrisk")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SIMULATION = 2
EXIT_OUTPUT = 3


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML or JSON file with config values")
    parser.add_argument("--seed", type=int, help="Seed (first seed of an ensemble)")
    parser.add_argument("--steps", type=int, help="Number of steps (horizon_steps)")
    parser.add_argument("--runs", type=int, help="Monte Carlo runs (n_sim)")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override any config value; repeatable",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bankrisk",
        description="Agent-based simulation of banks trading a risky asset under default contagion.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="Single seeded run")
    _add_config_flags(run_cmd)
    run_cmd.add_argument("--out", help="Output directory (default $BANKRISK_OUTPUT_DIR)")

    ens_cmd = commands.add_parser("ensemble", help="Monte Carlo ensemble")
    _add_config_flags(ens_cmd)
    ens_cmd.add_argument("--out", help="Output directory (default $BANKRISK_OUTPUT_DIR)")
    ens_cmd.add_argument("--workers", type=int, default=1, help="Worker processes")

    sweep_cmd = commands.add_parser("sweep", help="Parameter sweep")
    _add_config_flags(sweep_cmd)
    sweep_cmd.add_argument("--out", help="Output directory (default $BANKRISK_OUTPUT_DIR)")
    sweep_cmd.add_argument("--workers", type=int, default=1, help="Worker processes")
    target = sweep_cmd.add_mutually_exclusive_group(required=True)
    target.add_argument("--param", help="Config field to sweep")
    target.add_argument(
        "--alpha",
        type=float,
        nargs="+",
        help="Target trend-follower fractions; swept through a0",
    )
    sweep_cmd.add_argument(
        "--values",
        nargs="+",
        help="Values for --param, space- or comma-separated (--values -1.0 -0.8)",
    )

    validate_cmd = commands.add_parser("validate", help="Check a configuration and print it")
    _add_config_flags(validate_cmd)

    curve_cmd = commands.add_parser("curve", help="Attitude probabilities over a return grid")
    curve_cmd.add_argument("--theta1", type=float, default=-1.0)
    curve_cmd.add_argument("--theta2", type=float, default=1.0)
    curve_cmd.add_argument("--a", type=float, default=1.0)
    curve_cmd.add_argument("--sigma", type=float, default=2.0)
    curve_cmd.add_argument("--min", dest="r_min", type=float, default=-10.0)
    curve_cmd.add_argument("--max", dest="r_max", type=float, default=10.0)
    curve_cmd.add_argument("--points", type=int, default=201)
    curve_cmd.add_argument("--out", help="CSV file (default stdout)")
    return parser


def _config_from_args(args: argparse.Namespace) -> SimConfig:
    overrides = parse_overrides(args.set)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.steps is not None:
        overrides["horizon_steps"] = args.steps
    if args.runs is not None:
        overrides["n_sim"] = args.runs
    return parse_config(args.config, overrides)


def _parse_values(tokens: Sequence[str] | None) -> list[Any]:
    pieces = [p for token in tokens or [] for p in token.split(",") if p.strip()]
    if not pieces:
        raise ConfigError("--values is required with --param")
    try:
        return [yaml.safe_load(p) for p in pieces]
    except yaml.YAMLError as e:
        raise ConfigError(f"unreadable --values {' '.join(tokens)!r}: {e}") from e


# =============================================================================
# Commands
# =============================================================================


def cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    record = run(config)
    bundle = write_outputs(record, resolve_output_dir(args.out))
    print(f"seed={record.seed} config_hash={record.config_hash}")
    print(f"steps={record.n_steps} defaults={int(record.n_defaults[-1])} alpha={record.alpha:.4f}")
    print(f"outputs: {bundle.directory}")
    return EXIT_OK


def cmd_ensemble(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    summary = monte_carlo(config, workers=args.workers)
    paths = write_ensemble_outputs(summary, config, resolve_output_dir(args.out))
    print(f"runs={summary.n_runs} config_hash={summary.config_hash}")
    print(
        f"mean H={summary.loss_mean:.6g} mean defaults={summary.default_count_mean:.3f} "
        f"P(>={summary.systemic_k} defaults)={summary.systemic_default_probability:.3f}"
    )
    print(f"outputs: {paths['summary'].parent}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    if args.alpha:
        parameter = "a0"
        try:
            values = [a0_for_alpha(a, config.a_width) for a in args.alpha]
        except ValueError as e:
            raise ConfigError(str(e)) from e
    else:
        parameter = args.param
        values = _parse_values(args.values)
    rows = sweep(config, parameter, values, config.n_sim, workers=args.workers)
    paths = write_sweep_outputs(rows, config, resolve_output_dir(args.out))
    for row in rows:
        print(
            f"{row.parameter}={row.value} alpha={row.alpha_mean:.4f} "
            f"vol={row.volatility_mean:.6g} H={row.loss_mean:.6g} defaults={row.default_count_mean:.3f}"
        )
    print(f"outputs: {paths['table'].parent}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    print(f"# config_hash={config_hash(config)}")
    print(yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False), end="")
    return EXIT_OK


def cmd_curve(args: argparse.Namespace) -> int:
    try:
        behavior = BankBehavior(theta1=args.theta1, theta2=args.theta2, a=args.a, sigma=args.sigma)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    if args.points < 2 or not args.r_min < args.r_max:
        raise ConfigError("curve needs --points >= 2 and --min < --max")
    frame = response_curve(behavior, np.linspace(args.r_min, args.r_max, args.points))
    if args.out:
        try:
            frame.to_csv(args.out, index=False, lineterminator="\n")
        except OSError as e:
            raise OutputError(args.out, e) from e
        print(f"outputs: {args.out}")
    else:
        frame.to_csv(sys.stdout, index=False, lineterminator="\n")
    mode = waiting_mode(behavior)
    logger.info(f"Waiting is most likely at R={mode}" if mode is not None else "a=0: flat curve")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "ensemble": cmd_ensemble,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "curve": cmd_curve,
}


# =============================================================================
# Entry Point
# =============================================================================


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line; returns the exit code."""
    logging.basicConfig(
        level=getattr(logging, os.environ.get("BANKRISK_LOG_LEVEL", "INFO").upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse has already printed usage or help
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        for message in e.errors:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as e:
        print(f"simulation error: {e}", file=sys.stderr)
        dump = getattr(e, "dump", None)
        if dump:
            print(f"state dump: {dump}", file=sys.stderr)
        return EXIT_SIMULATION
    except (OutputError, OSError) as e:
        print(f"output error: {e}", file=sys.stderr)
        return EXIT_OUTPUT
    except BankRiskError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
