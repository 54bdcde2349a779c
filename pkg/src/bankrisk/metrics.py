"""Regulatory ratios, aggregate observables and Monte Carlo estimators.

Ratios are in percent. A ratio whose denominator is zero, or so small that
the quotient overflows, is not computable and comes back as NaN; breach
flags treat NaN as "no breach".
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

from bankrisk.bank import BankBook
from bankrisk.market import BehaviorTable
from bankrisk.types import BankBehavior, BankState, RunOutcome

CAR_MINIMUM_PCT = 8.0
CEAR_MINIMUM_PCT = 4.5


def _ratio(numerator, denominator):
    num = np.asarray(numerator, dtype=float)
    den = np.asarray(denominator, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.where(den != 0, 100.0 * num / np.where(den != 0, den, 1.0), np.nan)
    # a subnormal denominator overflows; that is as uncomputable as a zero one
    out = np.where(np.isfinite(out), out, np.nan)
    return float(out) if out.ndim == 0 else out


# =============================================================================
# Capital ratios
# =============================================================================


def car(cash, financial_assets, credit, debt, deposit):
    """Capital adequacy ratio (C + J + K - L - D) / (J + K) * 100.

    Returns NaN where J + K is zero or too small for the quotient to be finite.
    """
    return _ratio(cash + financial_assets + credit - debt - deposit, financial_assets + credit)


def cear(cash, financial_assets, credit, attitude, volume, price, c: float, rate_interbank: float):
    """Common equity adequacy ratio C / (J + (1 + lambda_I c) K + c |y| V S) * 100.

    The last term is an operational-risk charge on the step's traded notional.

    Raises:
        ValueError: If c is outside (0, 1).
    """
    if not 0 < c < 1:
        raise ValueError(f"cear constant c must lie in (0, 1), got {c}")
    denominator = (
        financial_assets
        + (1.0 + rate_interbank * c) * credit
        + c * np.abs(attitude) * volume * price
    )
    return _ratio(cash, denominator)


def car_breach(car_pct):
    """True where CAR is below the 8% minimum."""
    return np.asarray(car_pct) < CAR_MINIMUM_PCT


def cear_breach(cear_pct):
    """True where CEAR is below the 4.5% minimum."""
    return np.asarray(cear_pct) < CEAR_MINIMUM_PCT


# =============================================================================
# Aggregates
# =============================================================================


def totals(banks: BankBook | Iterable[BankState]) -> tuple[float, float]:
    """(C_total, n_total) over every bank, defaulted ones included."""
    if isinstance(banks, BankBook):
        return float(banks.cash.sum()), float(banks.asset_units.sum())
    banks = list(banks)
    return float(sum(b.cash for b in banks)), float(sum(b.asset_units for b in banks))


def alpha(behaviors: BehaviorTable | Sequence[BankBehavior]) -> float:
    """Fraction of trend followers (a > 0)."""
    a = behaviors.a if isinstance(behaviors, BehaviorTable) else np.array([b.a for b in behaviors])
    if len(a) == 0:
        raise ValueError("alpha needs at least one bank")
    return float(np.count_nonzero(a > 0) / len(a))


def expected_alpha(a0: float, width: float = 2.1) -> float:
    """Probability mass above zero of U(a0, a0 + width)."""
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    return float(np.clip((a0 + width) / width, 0.0, 1.0))


def a0_for_alpha(target: float, width: float = 2.1) -> float:
    """Lower bound a0 for which U(a0, a0 + width) has ``target`` mass above zero."""
    if not 0 < target <= 1:
        raise ValueError(f"target alpha must lie in (0, 1], got {target}")
    return width * (target - 1.0)


# =============================================================================
# Default probabilities
# =============================================================================


def _defaulted_by(outcomes: Sequence[RunOutcome], horizon: int | None) -> np.ndarray:
    """Boolean (runs, banks) matrix: bank defaulted at or before ``horizon``."""
    if not outcomes:
        raise ValueError("need at least one run outcome")
    times = np.vstack([o.default_times for o in outcomes])
    if horizon is None:
        return times >= 0
    return (times >= 0) & (times <= horizon)


def default_probability(
    outcomes: Sequence[RunOutcome],
    bank: int,
    horizon: int | None = None,
) -> float:
    """Relative frequency of runs in which ``bank`` defaulted by ``horizon``.

    Args:
        outcomes: Runs sharing one config, differing by seed.
        bank: Bank index.
        horizon: Last step counted; None counts every step of each run.

    Returns:
        M[default] / M_sim.
    """
    return float(_defaulted_by(outcomes, horizon)[:, bank].mean())


def default_probabilities(outcomes: Sequence[RunOutcome], horizon: int | None = None) -> np.ndarray:
    """``default_probability`` for every bank at once."""
    return _defaulted_by(outcomes, horizon).mean(axis=0)


def systemic_default_probability(
    outcomes: Sequence[RunOutcome],
    k: int = 1,
    horizon: int | None = None,
) -> float:
    """Fraction of runs with at least ``k`` defaults by ``horizon``."""
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    counts = _defaulted_by(outcomes, horizon).sum(axis=1)
    return float(np.mean(counts >= k))


def default_probability_curve(
    outcomes: Sequence[RunOutcome],
    bank: int,
    horizons: Iterable[int],
) -> np.ndarray:
    """``default_probability`` of one bank over several horizons."""
    flags = np.vstack([o.default_times for o in outcomes])[:, bank]
    return np.array([float(np.mean((flags >= 0) & (flags <= h))) for h in horizons])
