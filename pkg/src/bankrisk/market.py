"""Risky-asset market: attitudes, order sizing, price formation and settlement.

Each bank reacts to the last log return R with a three-state attitude
(buy +1, wait 0, sell -1):

    p_buy(R)  = 1/2 erfc((theta2 - a R) / (sqrt(2) sigma))
    p_sell(R) = 1/2 erfc((a R - theta1) / (sqrt(2) sigma))

Orders are sized in proportion to equity, blocked when they cannot be
executed, and the feasible excess demand moves the log price linearly.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from scipy.special import erf, erfc

from bankrisk.errors import InvariantViolation, LedgerError
from bankrisk.types import BankBehavior, BankState, MarketState, Order

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
PRICE_FLOOR = float(np.finfo(float).tiny)


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass
class BehaviorTable:
    """Behaviour parameters of every bank as parallel arrays."""

    theta1: np.ndarray
    theta2: np.ndarray
    a: np.ndarray
    sigma: np.ndarray

    @classmethod
    def from_behaviors(cls, behaviors: Sequence[BankBehavior]) -> BehaviorTable:
        return cls(
            theta1=np.array([b.theta1 for b in behaviors], dtype=float),
            theta2=np.array([b.theta2 for b in behaviors], dtype=float),
            a=np.array([b.a for b in behaviors], dtype=float),
            sigma=np.array([b.sigma for b in behaviors], dtype=float),
        )

    @property
    def n_banks(self) -> int:
        return len(self.a)

    def behavior(self, i: int) -> BankBehavior:
        return BankBehavior(
            theta1=float(self.theta1[i]),
            theta2=float(self.theta2[i]),
            a=float(self.a[i]),
            sigma=float(self.sigma[i]),
        )

    def behaviors(self) -> list[BankBehavior]:
        return [self.behavior(i) for i in range(self.n_banks)]

    def subset(self, indices: np.ndarray) -> BehaviorTable:
        return BehaviorTable(
            theta1=self.theta1[indices],
            theta2=self.theta2[indices],
            a=self.a[indices],
            sigma=self.sigma[indices],
        )


Behavior = BankBehavior | BehaviorTable


# =============================================================================
# Attitude probabilities
# =============================================================================


def prob_buy(last_return: float, b: Behavior):
    """Probability of buying given the last log return."""
    p = 0.5 * erfc((b.theta2 - b.a * last_return) / (SQRT2 * b.sigma))
    return _scalar_or_array(np.clip(p, 0.0, 1.0))


def prob_sell(last_return: float, b: Behavior):
    """Probability of selling given the last log return."""
    p = 0.5 * erfc((b.a * last_return - b.theta1) / (SQRT2 * b.sigma))
    return _scalar_or_array(np.clip(p, 0.0, 1.0))


def prob_wait(last_return: float, b: Behavior):
    """Probability of waiting, 1 - p_buy - p_sell.

    Evaluated as (erf(u) + erf(v)) / 2, which keeps precision when both
    tails are small.
    """
    scale = SQRT2 * b.sigma
    u = (b.theta2 - b.a * last_return) / scale
    v = (b.a * last_return - b.theta1) / scale
    return _scalar_or_array(np.clip(0.5 * (erf(u) + erf(v)), 0.0, 1.0))


def waiting_mode(b: BankBehavior) -> float | None:
    """Return at which waiting is most likely: (theta1 + theta2) / (2a); None when a == 0."""
    if b.a == 0:
        return None
    return (b.theta1 + b.theta2) / (2.0 * b.a)


def response_curve(b: BankBehavior, returns: Iterable[float]) -> pd.DataFrame:
    """Attitude probabilities over a grid of returns."""
    r = np.asarray(list(returns), dtype=float)
    return pd.DataFrame(
        {
            "log_return": r,
            "p_buy": np.atleast_1d(prob_buy(r, b)),
            "p_wait": np.atleast_1d(prob_wait(r, b)),
            "p_sell": np.atleast_1d(prob_sell(r, b)),
        }
    )


# =============================================================================
# Attitudes and orders
# =============================================================================


def attitude_from_uniform(u, p_buy, p_sell):
    """Map a uniform draw to +1 (u < p_buy), -1 (u < p_buy + p_sell) or 0."""
    return np.where(u < p_buy, 1, np.where(u < p_buy + p_sell, -1, 0)).astype(np.int8)


def draw_attitude(last_return: float, b: BankBehavior, rng: np.random.Generator) -> int:
    """Draw one bank's attitude; consumes exactly one uniform from rng."""
    u = rng.random()
    return int(attitude_from_uniform(u, prob_buy(last_return, b), prob_sell(last_return, b)))


def draw_attitudes(last_return: float, table: BehaviorTable, rng: np.random.Generator) -> np.ndarray:
    """Draw attitudes for every bank in ``table``, one uniform each, in index order.

    Consumes the stream exactly as ``draw_attitude`` called bank by bank would.
    """
    u = rng.random(table.n_banks)
    return attitude_from_uniform(u, prob_buy(last_return, table), prob_sell(last_return, table))


def trade_volume(equity, eta: float):
    """Order size eta * equity, zero for non-positive equity."""
    return _scalar_or_array(np.maximum(0.0, eta * np.asarray(equity, dtype=float)))


def clamp_feasible(attitude, volume, cash, asset_units, price: float):
    """Turn orders that cannot be executed at ``price`` into waiting.

    A buy needs cash >= volume * price; a sell needs asset_units >= volume.
    """
    attitude = np.asarray(attitude)
    blocked = ((attitude == 1) & (cash < volume * price)) | (
        (attitude == -1) & (asset_units < volume)
    )
    out = np.where(blocked, 0, attitude).astype(np.int8)
    return int(out) if out.ndim == 0 else out


def net_demand(attitudes: np.ndarray, volumes: np.ndarray) -> float:
    """Sum of volume * attitude."""
    return float(np.dot(np.asarray(attitudes, dtype=float), np.asarray(volumes, dtype=float)))


def excess_demand(orders: Sequence[Order]) -> float:
    """Excess demand of a list of orders."""
    if not orders:
        return 0.0
    return net_demand(
        np.array([o.attitude for o in orders]),
        np.array([o.volume for o in orders]),
    )


# =============================================================================
# Price and settlement
# =============================================================================


def update_price(market: MarketState, excess: float) -> MarketState:
    """Move the price by exp(gamma * excess) and record the realised log return.

    Raises:
        InvariantViolation: If the price overflows.
    """
    r = market.gamma * excess
    log_price = market.log_price + r
    price = market.price * math.exp(r) if r < 700 else math.inf
    reported = market.floor_reported
    if market.price == PRICE_FLOOR or price < PRICE_FLOOR:
        price = max(math.exp(log_price) if log_price > -745 else 0.0, PRICE_FLOOR)
        if price == PRICE_FLOOR and not reported:
            logger.warning(f"Price fell below the float range (log price {log_price:.1f}); flooring")
            reported = True
    if not math.isfinite(price):
        raise InvariantViolation(
            "price overflowed",
            dump={"price": market.price, "log_price": log_price, "excess": excess},
        )
    return replace(
        market, price=price, last_return=r, log_price=log_price, floor_reported=reported
    )


def settle(bank: BankState, order: Order, price: float) -> BankState:
    """Execute a feasible order at ``price``.

    Raises:
        LedgerError: If the order would overdraw cash or holdings.
    """
    if order.attitude == 0:
        return bank
    notional = order.volume * price
    if order.attitude == 1:
        cash, units = bank.cash - notional, bank.asset_units + order.volume
        overdrawn = cash < 0
    else:
        cash, units = bank.cash + notional, bank.asset_units - order.volume
        overdrawn = units < 0
    if overdrawn:
        raise LedgerError(
            f"bank {bank.id}: infeasible order {order}",
            dump={"bank": bank, "order": order, "price": price},
        )
    return replace(bank, cash=cash, asset_units=units)


def settle_many(
    cash: np.ndarray,
    asset_units: np.ndarray,
    attitudes: np.ndarray,
    volumes: np.ndarray,
    price: float,
    step: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Vector form of ``settle``: cash -= y V S, units += y V.

    Raises:
        LedgerError: If any buy overdraws cash or any sell overdraws holdings.
    """
    traded = np.where(attitudes != 0, volumes, 0.0) * attitudes
    new_cash = cash - traded * price
    new_units = asset_units + traded
    bad = ((attitudes == 1) & (new_cash < 0)) | ((attitudes == -1) & (new_units < 0))
    if np.any(bad):
        ids = np.flatnonzero(bad)
        raise LedgerError(
            f"infeasible settlement for banks {ids.tolist()}",
            step=step,
            dump={
                "bank_ids": ids.tolist(),
                "cash": cash[ids].tolist(),
                "asset_units": asset_units[ids].tolist(),
                "attitudes": attitudes[ids].tolist(),
                "volumes": volumes[ids].tolist(),
                "price": price,
            },
        )
    return new_cash, new_units
