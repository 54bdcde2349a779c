"""Monte Carlo ensembles and parameter sweeps.

An ensemble runs one config under seeds base_seed, base_seed + 1, ... and
reduces the outcomes. Outcomes are sorted by seed before any reduction, so
the summary does not depend on the order in which runs finish.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any

import numpy as np

from bankrisk.config import SimConfig, config_hash, with_overrides
from bankrisk.engine import run
from bankrisk.errors import ConfigError, EnsembleError
from bankrisk.metrics import default_probabilities, systemic_default_probability
from bankrisk.rng import ensemble_seeds
from bankrisk.types import EnsembleSummary, RunOutcome, SweepRow

logger = logging.getLogger(__name__)

QUANTILES = {"q05": 0.05, "q25": 0.25, "q50": 0.5, "q75": 0.75, "q95": 0.95}

Runner = Callable[[SimConfig], RunOutcome]


def run_outcome(config: SimConfig) -> RunOutcome:
    """Default runner: one full run reduced to its outcome."""
    return run(config).outcome()


def _quantiles(values: np.ndarray) -> dict[str, float]:
    return {name: float(np.quantile(values, q)) for name, q in QUANTILES.items()}


def quartile_horizons(horizon: int) -> list[int]:
    """T/4, T/2, 3T/4 and T (floored, duplicates dropped)."""
    return sorted({horizon * q // 4 for q in (1, 2, 3, 4)})


def summarize_ensemble(
    outcomes: Iterable[RunOutcome],
    config_hash: str,
    systemic_k: int = 1,
) -> EnsembleSummary:
    """Reduce run outcomes to default probabilities and distribution summaries.

    Raises:
        ValueError: If there are no outcomes or their horizons differ.
    """
    outcomes = sorted(outcomes, key=lambda o: o.seed)
    if not outcomes:
        raise ValueError("an ensemble needs at least one outcome")
    horizons = {o.horizon for o in outcomes}
    if len(horizons) != 1:
        raise ValueError(f"outcomes mix horizons {sorted(horizons)}")
    horizon = horizons.pop()

    losses = np.array([o.final_loss for o in outcomes])
    counts = np.array([o.n_defaults for o in outcomes], dtype=float)
    return EnsembleSummary(
        config_hash=config_hash,
        seeds=[o.seed for o in outcomes],
        horizon=horizon,
        default_probability=default_probabilities(outcomes, horizon),
        systemic_k=systemic_k,
        systemic_default_probability=systemic_default_probability(outcomes, systemic_k, horizon),
        systemic_by_horizon={
            h: systemic_default_probability(outcomes, systemic_k, h) for h in quartile_horizons(horizon)
        },
        alpha_mean=float(np.mean([o.alpha for o in outcomes])),
        volatility_mean=float(np.mean([o.return_volatility for o in outcomes])),
        loss_mean=float(losses.mean()),
        loss_quantiles=_quantiles(losses),
        default_count_mean=float(counts.mean()),
        default_count_quantiles=_quantiles(counts),
        outcomes=outcomes,
    )


def monte_carlo(
    config: SimConfig,
    runs: int | None = None,
    base_seed: int | None = None,
    workers: int = 1,
    runner: Runner = run_outcome,
) -> EnsembleSummary:
    """Run ``runs`` seeds of ``config`` and summarize them.

    Args:
        config: Shared configuration; its seed is replaced per run.
        runs: Number of runs M_sim (default ``config.n_sim``).
        base_seed: First seed (default ``config.seed``).
        workers: Processes to use; 1 runs everything in this process.
        runner: Maps a seeded config to its outcome. Must be picklable when
            ``workers > 1``.

    Returns:
        The ensemble summary.

    Raises:
        EnsembleError: If any run fails; names the seed.
    """
    runs = config.n_sim if runs is None else runs
    base_seed = config.seed if base_seed is None else base_seed
    seeds = ensemble_seeds(base_seed, runs)
    configs = [with_overrides(config, seed=s) for s in seeds]
    logger.info(f"Ensemble start: {runs} runs from seed {base_seed}, workers={workers}")

    outcomes: list[RunOutcome] = []
    if workers > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(runner, cfg): cfg.seed for cfg in configs}
            for future in as_completed(futures):
                seed = futures[future]
                try:
                    outcomes.append(future.result())
                except Exception as e:
                    raise EnsembleError(seed, e) from e
                logger.info(f"Ensemble progress: {len(outcomes)}/{runs} (seed {seed} done)")
    else:
        for cfg in configs:
            try:
                outcomes.append(runner(cfg))
            except Exception as e:
                raise EnsembleError(cfg.seed, e) from e
            logger.info(f"Ensemble progress: {len(outcomes)}/{runs} (seed {cfg.seed} done)")

    summary = summarize_ensemble(outcomes, config_hash(config), config.systemic_k)
    logger.info(
        f"Ensemble finish: mean H={summary.loss_mean:.6g} "
        f"P(>= {summary.systemic_k} defaults)={summary.systemic_default_probability:.3f}"
    )
    return summary


def sweep(
    base_config: SimConfig,
    parameter: str,
    values: Sequence[Any],
    runs_per_value: int,
    base_seed: int | None = None,
    workers: int = 1,
    runner: Runner = run_outcome,
) -> list[SweepRow]:
    """One ensemble per value of ``parameter``.

    Raises:
        ConfigError: If ``parameter`` is not a config field or a value is
            invalid for it.
    """
    if parameter not in SimConfig.model_fields:
        known = ", ".join(sorted(SimConfig.model_fields))
        raise ConfigError(f"unknown sweep parameter {parameter!r}; known parameters: {known}")

    rows = []
    for value in values:
        config = with_overrides(base_config, **{parameter: value})
        logger.info(f"Sweep: {parameter}={value}")
        summary = monte_carlo(config, runs_per_value, base_seed, workers, runner)
        rows.append(
            SweepRow(
                parameter=parameter,
                value=value,
                runs=summary.n_runs,
                alpha_mean=summary.alpha_mean,
                volatility_mean=summary.volatility_mean,
                loss_mean=summary.loss_mean,
                default_count_mean=summary.default_count_mean,
                systemic_default_probability=summary.systemic_default_probability,
            )
        )
    return rows
