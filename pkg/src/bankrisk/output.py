"""Deterministic output files.

Every CSV starts with one comment line ``# seed=<seed> config_hash=<hash>``
followed by a header row. Floats are written at full round-trip precision,
NaN as an empty cell; JSON documents use null for NaN. Rerunning the same
(config, seed) reproduces every file byte for byte.
"""

from __future__ import annotations

import json
import logging
import math
import os
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from bankrisk import __version__
from bankrisk.config import SimConfig, config_hash
from bankrisk.errors import OutputError
from bankrisk.metrics import car_breach, cear_breach, default_probabilities
from bankrisk.types import EnsembleSummary, OutputBundle, RunRecord, SweepRow

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_OUTPUT_DIR = "./bankrisk-out"

TIMESERIES_FILE = "timeseries.csv"
BANK_PANEL_FILE = "bank_panel.csv"
EVENTS_FILE = "events.csv"
SUMMARY_FILE = "summary.json"


def resolve_output_dir(out: str | Path | None = None) -> Path:
    """``out`` if given, else $BANKRISK_OUTPUT_DIR, else ./bankrisk-out."""
    if out is not None:
        return Path(out)
    return Path(os.environ.get("BANKRISK_OUTPUT_DIR", DEFAULT_OUTPUT_DIR))


def _clean(value: Any) -> Any:
    """Make a value JSON-safe: numpy scalars to Python, NaN to None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _write_csv(df: pd.DataFrame, path: Path, seed: int | None, digest: str) -> Path:
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(f"# seed={'' if seed is None else seed} config_hash={digest}\n")
            df.to_csv(f, index=False, lineterminator="\n")
    except OSError as e:
        raise OutputError(str(path), e) from e
    return path


def _write_json(document: dict[str, Any], path: Path) -> Path:
    try:
        path.write_text(json.dumps(_clean(document), indent=2, allow_nan=False) + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(str(path), e) from e
    return path


def _ensure_dir(directory: Path) -> Path:
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(str(directory), e) from e
    return directory


def _config_echo(config: SimConfig) -> dict[str, Any]:
    echo = config.model_dump(mode="json")
    echo["rate_deposit"] = config.rate_deposit
    echo["rate_interbank"] = config.rate_interbank
    echo["expected_alpha"] = config.expected_alpha
    return echo


# =============================================================================
# Single run
# =============================================================================


def timeseries_frame(record: RunRecord) -> pd.DataFrame:
    """Per-step aggregates, one row per step including step 0."""
    return pd.DataFrame(
        {
            "step": np.arange(record.n_steps + 1),
            "price": record.price,
            "log_return": record.log_return,
            "total_cash": record.total_cash,
            "total_units": record.total_units,
            "H": record.cumulative_loss,
            "n_defaults": record.n_defaults,
            "log_price": record.log_price,
            "direct_loss": record.direct_loss,
        }
    )


def bank_panel_frame(record: RunRecord) -> pd.DataFrame:
    """Per-step per-bank ratios in long format, (steps + 1) * N rows."""
    rows, n = record.car.shape
    car_pct = record.car.ravel()
    cear_pct = record.cear.ravel()
    return pd.DataFrame(
        {
            "step": np.repeat(np.arange(rows), n),
            "bank_id": np.tile(np.arange(n), rows),
            "car_pct": car_pct,
            "cear_pct": cear_pct,
            "alive": record.alive.ravel().astype(np.int8),
            "car_breach_8pct": car_breach(car_pct).astype(np.int8),
            "cear_breach_4_5pct": cear_breach(cear_pct).astype(np.int8),
        }
    )


def events_frame(record: RunRecord) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "step": [e.step for e in record.events],
            "bank_id": [e.bank_id for e in record.events],
            "trigger": [e.trigger for e in record.events],
            "cascade_iterations": [e.cascade_iterations for e in record.events],
            "economic_value": [e.economic_value for e in record.events],
        },
        columns=["step", "bank_id", "trigger", "cascade_iterations", "economic_value"],
    )


def run_summary(record: RunRecord) -> dict[str, Any]:
    """The JSON summary document of one run."""
    outcome = record.outcome()
    return {
        "format_version": FORMAT_VERSION,
        "bankrisk_version": __version__,
        "seed": record.seed,
        "config_hash": record.config_hash,
        "rng_algorithm": record.rng_algorithm,
        "n_steps": record.n_steps,
        "n_banks": record.n_banks,
        "alpha": record.alpha,
        "final_price": outcome.final_price,
        "final_log_price": float(record.log_price[-1]),
        "return_volatility": outcome.return_volatility,
        "H_final": outcome.final_loss,
        "direct_loss_final": outcome.direct_loss,
        "n_defaults": outcome.n_defaults,
        "default_times": [None if t < 0 else int(t) for t in record.default_times],
        "default_probability": default_probabilities([outcome], record.n_steps),
        "config": _config_echo(record.config),
    }


def write_outputs(record: RunRecord, directory: str | Path) -> OutputBundle:
    """Write the four files of one run into ``directory`` (created if needed).

    Raises:
        OutputError: If a file cannot be written.
    """
    directory = _ensure_dir(Path(directory))
    bundle = OutputBundle(
        directory=directory,
        timeseries=_write_csv(
            timeseries_frame(record), directory / TIMESERIES_FILE, record.seed, record.config_hash
        ),
        bank_panel=_write_csv(
            bank_panel_frame(record), directory / BANK_PANEL_FILE, record.seed, record.config_hash
        ),
        events=_write_csv(events_frame(record), directory / EVENTS_FILE, record.seed, record.config_hash),
        summary=_write_json(run_summary(record), directory / SUMMARY_FILE),
    )
    logger.info(f"Wrote run outputs to {directory}")
    return bundle


# =============================================================================
# Ensembles and sweeps
# =============================================================================


def ensemble_document(summary: EnsembleSummary, config: SimConfig) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "bankrisk_version": __version__,
        "config_hash": summary.config_hash,
        "seeds": summary.seeds,
        "n_runs": summary.n_runs,
        "horizon": summary.horizon,
        "systemic_k": summary.systemic_k,
        "systemic_default_probability": summary.systemic_default_probability,
        "systemic_by_horizon": summary.systemic_by_horizon,
        "alpha_mean": summary.alpha_mean,
        "volatility_mean": summary.volatility_mean,
        "loss_mean": summary.loss_mean,
        "loss_quantiles": summary.loss_quantiles,
        "default_count_mean": summary.default_count_mean,
        "default_count_quantiles": summary.default_count_quantiles,
        "default_probability": summary.default_probability,
        "config": _config_echo(config),
    }


def write_ensemble_outputs(
    summary: EnsembleSummary,
    config: SimConfig,
    directory: str | Path,
) -> dict[str, Path]:
    """Write runs.csv, default_probabilities.csv and ensemble_summary.json.

    Raises:
        OutputError: If a file cannot be written.
    """
    directory = _ensure_dir(Path(directory))
    seed = summary.seeds[0] if summary.seeds else None
    outcomes = summary.outcomes
    runs = pd.DataFrame(
        {
            "seed": [o.seed for o in outcomes],
            "alpha": [o.alpha for o in outcomes],
            "return_volatility": [o.return_volatility for o in outcomes],
            "final_price": [o.final_price for o in outcomes],
            "final_loss": [o.final_loss for o in outcomes],
            "direct_loss": [o.direct_loss for o in outcomes],
            "n_defaults": [o.n_defaults for o in outcomes],
        }
    )
    probabilities = pd.DataFrame(
        {
            "bank_id": np.arange(len(summary.default_probability)),
            "probability": summary.default_probability,
        }
    )
    paths = {
        "runs": _write_csv(runs, directory / "runs.csv", seed, summary.config_hash),
        "default_probabilities": _write_csv(
            probabilities, directory / "default_probabilities.csv", seed, summary.config_hash
        ),
        "summary": _write_json(ensemble_document(summary, config), directory / "ensemble_summary.json"),
    }
    logger.info(f"Wrote ensemble outputs to {directory}")
    return paths


def sweep_frame(rows: Sequence[SweepRow]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "parameter": [r.parameter for r in rows],
            "value": [r.value for r in rows],
            "runs": [r.runs for r in rows],
            "alpha_mean": [r.alpha_mean for r in rows],
            "volatility_mean": [r.volatility_mean for r in rows],
            "loss_mean": [r.loss_mean for r in rows],
            "default_count_mean": [r.default_count_mean for r in rows],
            "systemic_default_probability": [r.systemic_default_probability for r in rows],
        },
        columns=[
            "parameter",
            "value",
            "runs",
            "alpha_mean",
            "volatility_mean",
            "loss_mean",
            "default_count_mean",
            "systemic_default_probability",
        ],
    )


def write_sweep_outputs(
    rows: Sequence[SweepRow],
    base_config: SimConfig,
    directory: str | Path,
) -> dict[str, Path]:
    """Write sweep.csv and sweep.json.

    Raises:
        OutputError: If a file cannot be written.
    """
    directory = _ensure_dir(Path(directory))
    digest = config_hash(base_config)
    frame = sweep_frame(rows)
    document = {
        "format_version": FORMAT_VERSION,
        "bankrisk_version": __version__,
        "config_hash": digest,
        "rows": frame.to_dict(orient="records"),
        "config": _config_echo(base_config),
    }
    paths = {
        "table": _write_csv(frame, directory / "sweep.csv", base_config.seed, digest),
        "summary": _write_json(document, directory / "sweep.json"),
    }
    logger.info(f"Wrote sweep outputs to {directory}")
    return paths
