"""MCP Server for bankrisk.

Exposes runs, ensembles, sweeps, config validation and response curves as
Model Context Protocol tools. Simulations run in a worker thread so the
event loop stays responsive.
"""

import asyncio
import logging
import os
from typing import Any

import numpy as np
from mcp.server.fastmcp import FastMCP

from bankrisk.config import config_hash, parse_config
from bankrisk.engine import run
from bankrisk.ensemble import monte_carlo, sweep
from bankrisk.errors import BankRiskError, ConfigError
from bankrisk.market import response_curve, waiting_mode
from bankrisk.metrics import a0_for_alpha
from bankrisk.output import (
    resolve_output_dir,
    write_ensemble_outputs,
    write_outputs,
    write_sweep_outputs,
)
from bankrisk.types import BankBehavior

# Configure logging (never use print in STDIO servers!)
logging.basicConfig(
    level=getattr(logging, os.environ.get("BANKRISK_LOG_LEVEL", "INFO").upper(), logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger("bankrisk")

# Initialize FastMCP server
mcp = FastMCP("bankrisk")


def _overrides(
    seed: int | None,
    steps: int | None,
    runs: int | None,
    settings: dict[str, Any] | None,
) -> dict[str, Any]:
    overrides = dict(settings or {})
    if seed is not None:
        overrides["seed"] = seed
    if steps is not None:
        overrides["horizon_steps"] = steps
    if runs is not None:
        overrides["n_sim"] = runs
    return overrides


def _error_report(e: BankRiskError) -> str:
    if isinstance(e, ConfigError):
        return "\n".join(["# Configuration error", ""] + [f"- {m}" for m in e.errors])
    return f"# Simulation failed\n\n{e}"


# =============================================================================
# MCP Tools
# =============================================================================


@mcp.tool()
async def bankrisk_run(
    config_path: str | None = None,
    seed: int | None = None,
    steps: int | None = None,
    settings: dict[str, Any] | None = None,
    out: str | None = None,
) -> str:
    """Run one seeded simulation and write its output bundle.

    Args:
        config_path: Optional YAML/JSON config file
        seed: Seed for the run
        steps: Number of steps (defaults to the config horizon)
        settings: Extra config overrides, e.g. {"a0": -0.45}
        out: Output directory (defaults to $BANKRISK_OUTPUT_DIR)

    Returns:
        Markdown report with headline results and output paths
    """
    try:
        config = parse_config(config_path, _overrides(seed, steps, None, settings))
        record = await asyncio.to_thread(run, config)
        bundle = write_outputs(record, resolve_output_dir(out))
    except BankRiskError as e:
        logger.error(f"Run failed: {e}")
        return _error_report(e)

    lines = [
        "# bankrisk run",
        "",
        f"- Seed: {record.seed}",
        f"- Config hash: {record.config_hash}",
        f"- Steps: {record.n_steps}",
        f"- Banks: {record.n_banks}",
        f"- Trend followers (alpha): {record.alpha:.4f}",
        f"- Return volatility: {record.return_volatility:.6g}",
        f"- Final price: {record.price[-1]:.6g}",
        f"- Defaults: {int(record.n_defaults[-1])}",
        f"- Total losses H(T): {record.cumulative_loss[-1]:.6g}",
        "",
        "## Files",
        f"- {bundle.timeseries}",
        f"- {bundle.bank_panel}",
        f"- {bundle.events}",
        f"- {bundle.summary}",
    ]
    return "\n".join(lines)


@mcp.tool()
async def bankrisk_ensemble(
    config_path: str | None = None,
    runs: int | None = None,
    seed: int | None = None,
    steps: int | None = None,
    settings: dict[str, Any] | None = None,
    out: str | None = None,
) -> str:
    """Run a Monte Carlo ensemble and estimate default probabilities.

    Args:
        config_path: Optional YAML/JSON config file
        runs: Number of runs (defaults to n_sim)
        seed: First seed; runs use seed, seed+1, ...
        steps: Number of steps per run
        settings: Extra config overrides
        out: Output directory (defaults to $BANKRISK_OUTPUT_DIR)

    Returns:
        Markdown report with ensemble statistics
    """
    try:
        config = parse_config(config_path, _overrides(seed, steps, runs, settings))
        summary = await asyncio.to_thread(monte_carlo, config)
        paths = write_ensemble_outputs(summary, config, resolve_output_dir(out))
    except BankRiskError as e:
        logger.error(f"Ensemble failed: {e}")
        return _error_report(e)

    riskiest = np.argsort(-summary.default_probability, kind="stable")[:5]
    lines = [
        "# bankrisk ensemble",
        "",
        f"- Runs: {summary.n_runs} (seeds {summary.seeds[0]}..{summary.seeds[-1]})",
        f"- Config hash: {summary.config_hash}",
        f"- Mean alpha: {summary.alpha_mean:.4f}",
        f"- Mean return volatility: {summary.volatility_mean:.6g}",
        f"- Mean H(T): {summary.loss_mean:.6g}",
        f"- Mean defaults: {summary.default_count_mean:.3f}",
        f"- P(at least {summary.systemic_k} defaults): {summary.systemic_default_probability:.3f}",
        "",
        "## Systemic default probability by horizon",
    ]
    for h, p in summary.systemic_by_horizon.items():
        lines.append(f"- t={h}: {p:.3f}")
    lines.extend(["", "## Highest default probabilities"])
    for i in riskiest:
        lines.append(f"- bank {int(i)}: {summary.default_probability[i]:.3f}")
    lines.extend(["", "## Files"] + [f"- {p}" for p in paths.values()])
    return "\n".join(lines)


@mcp.tool()
async def bankrisk_sweep(
    parameter: str | None = None,
    values: list[Any] | None = None,
    alphas: list[float] | None = None,
    runs_per_value: int | None = None,
    config_path: str | None = None,
    seed: int | None = None,
    steps: int | None = None,
    settings: dict[str, Any] | None = None,
    out: str | None = None,
) -> str:
    """Sweep a config parameter, one ensemble per value.

    Give either parameter + values, or alphas (target trend-follower
    fractions, converted to a0).

    Args:
        parameter: Config field to sweep
        values: Values for the parameter
        alphas: Target alpha values instead of parameter/values
        runs_per_value: Runs per value (defaults to n_sim)
        config_path: Optional YAML/JSON config file
        seed: First seed of every ensemble
        steps: Number of steps per run
        settings: Extra config overrides
        out: Output directory (defaults to $BANKRISK_OUTPUT_DIR)

    Returns:
        Markdown table of the sweep
    """
    try:
        config = parse_config(config_path, _overrides(seed, steps, runs_per_value, settings))
        if alphas:
            parameter, values = "a0", [a0_for_alpha(a, config.a_width) for a in alphas]
        if not parameter or not values:
            raise ConfigError("give parameter and values, or alphas")
        rows = await asyncio.to_thread(sweep, config, parameter, values, config.n_sim)
        paths = write_sweep_outputs(rows, config, resolve_output_dir(out))
    except (BankRiskError, ValueError) as e:
        logger.error(f"Sweep failed: {e}")
        return _error_report(e if isinstance(e, BankRiskError) else ConfigError(str(e)))

    lines = [
        f"# bankrisk sweep over {parameter}",
        "",
        "| value | alpha | volatility | mean H(T) | mean defaults | P(systemic) |",
        "|---|---|---|---|---|---|",
    ]
    for row in rows:
        lines.append(
            f"| {row.value} | {row.alpha_mean:.4f} | {row.volatility_mean:.6g} | "
            f"{row.loss_mean:.6g} | {row.default_count_mean:.3f} | "
            f"{row.systemic_default_probability:.3f} |"
        )
    lines.extend(["", "## Files"] + [f"- {p}" for p in paths.values()])
    return "\n".join(lines)


@mcp.tool()
async def bankrisk_validate_config(
    config_path: str | None = None,
    settings: dict[str, Any] | None = None,
) -> str:
    """Check a configuration and echo its effective values.

    Args:
        config_path: Optional YAML/JSON config file
        settings: Extra config overrides

    Returns:
        The effective configuration, or every problem found
    """
    try:
        config = parse_config(config_path, settings)
    except ConfigError as e:
        return _error_report(e)

    lines = [
        "# Configuration OK",
        "",
        f"- Config hash: {config_hash(config)}",
        f"- Expected alpha: {config.expected_alpha:.4f}",
        f"- Per-step rates: deposit {config.rate_deposit:.6e}, interbank {config.rate_interbank:.6e}",
        "",
        "## Values",
    ]
    for name, value in config.model_dump().items():
        lines.append(f"- {name}: {value}")
    return "\n".join(lines)


@mcp.tool()
async def bankrisk_response_curve(
    theta1: float = -1.0,
    theta2: float = 1.0,
    a: float = 1.0,
    sigma: float = 2.0,
    r_min: float = -10.0,
    r_max: float = 10.0,
    points: int = 21,
) -> str:
    """Tabulate buy/wait/sell probabilities of one trading behaviour.

    Args:
        theta1: Sell threshold
        theta2: Buy threshold (must exceed theta1)
        a: Reaction slope; positive for trend followers, negative for contrarians
        sigma: Noise scale (positive)
        r_min: Smallest log return
        r_max: Largest log return
        points: Grid size

    Returns:
        Markdown table of the response curve
    """
    try:
        behavior = BankBehavior(theta1=theta1, theta2=theta2, a=a, sigma=sigma)
    except ValueError as e:
        return _error_report(ConfigError(str(e)))
    if points < 2 or not r_min < r_max:
        return _error_report(ConfigError("need points >= 2 and r_min < r_max"))

    frame = response_curve(behavior, np.linspace(r_min, r_max, points))
    mode = waiting_mode(behavior)
    lines = [
        "# Response curve",
        "",
        f"- Waiting peaks at R = {mode:.4g}" if mode is not None else "- a = 0: probabilities do not depend on R",
        "",
        "| R | p_buy | p_wait | p_sell |",
        "|---|---|---|---|",
    ]
    for row in frame.itertuples(index=False):
        lines.append(f"| {row.log_return:.4g} | {row.p_buy:.4f} | {row.p_wait:.4f} | {row.p_sell:.4f} |")
    return "\n".join(lines)


# =============================================================================
# Server Entry Point
# =============================================================================


def main():
    """Run the MCP server."""
    logger.info("Starting bankrisk MCP server...")
    mcp.run(transport="stdio")


if __name__ == "__main__":
    main()
