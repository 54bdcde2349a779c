"""Bank balance sheets: accounting identities, solvency, interest and default.

The balance sheet of bank i holds cash C, risky-asset units n and credit K on
the asset side, and deposits D, interbank debt L and equity E on the
liability side:

    E = C + n*S + K - L - D

Credit and debt come from the exposure matrix (see ``bankrisk.network``).
The scalar functions take a ``BankState``; ``BankBook`` applies the same
formulas to every bank at once for the engine.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, replace

import numpy as np

from bankrisk.errors import DefaultStateError, RateDomainError
from bankrisk.types import BankState

DAYS_PER_YEAR = 365.0


# =============================================================================
# Formulas (scalars or arrays)
# =============================================================================


def equity_value(cash, asset_units, price, credit, debt, deposit):
    """C + n*S + K - L - D, element-wise."""
    return cash + asset_units * price + credit - debt - deposit


def interest_flow(deposit, credit, debt, rate_deposit: float, rate_interbank: float):
    """Cash change from one period of interest: -lambda_D*D - lambda_I*L + lambda_I*K."""
    return -rate_deposit * deposit - rate_interbank * debt + rate_interbank * credit


def annual_to_step_rate(annual_rate: float, dt_days: float) -> float:
    """Convert an annual rate to the compounding-equivalent rate per step.

    lambda = (1 + annual_rate) ** (dt_days / 365) - 1

    Args:
        annual_rate: Annual rate as a fraction (0.01 for 1%).
        dt_days: Step length in days.

    Returns:
        The per-step rate.

    Raises:
        RateDomainError: If annual_rate <= -1 or dt_days <= 0.
    """
    if annual_rate <= -1:
        raise RateDomainError(f"annual rate must exceed -1, got {annual_rate}")
    if dt_days <= 0:
        raise RateDomainError(f"dt_days must be positive, got {dt_days}")
    exponent = dt_days / DAYS_PER_YEAR
    if exponent == 1.0:
        return float(annual_rate)
    return math.expm1(math.log1p(annual_rate) * exponent)


# =============================================================================
# Single-bank operations
# =============================================================================


def financial_assets(bank: BankState, price: float) -> float:
    """Mark-to-market value J = n * S of the bank's risky-asset holdings."""
    return bank.asset_units * price


def equity(bank: BankState, price: float, credit: float, debt: float) -> float:
    """Equity E = C + J + K - L - D; may be negative."""
    return equity_value(bank.cash, bank.asset_units, price, credit, debt, bank.deposit)


def is_solvent(bank: BankState, price: float, credit: float, debt: float) -> bool:
    """Survival condition C + J + K > L + D, i.e. strictly positive equity."""
    return equity(bank, price, credit, debt) > 0


def apply_interest(
    bank: BankState,
    rate_deposit: float,
    rate_interbank: float,
    credit: float,
    debt: float,
) -> BankState:
    """Pay deposit and interbank interest and receive interbank interest.

    Cash may go negative; solvency is judged only by ``is_solvent``.
    """
    if not bank.alive:
        raise DefaultStateError(f"bank {bank.id} is defaulted and no longer accrues interest")
    flow = interest_flow(bank.deposit, credit, debt, rate_deposit, rate_interbank)
    return replace(bank, cash=bank.cash + flow)


def mark_default(bank: BankState, step: int, economic_value: float) -> BankState:
    """Freeze a bank at default time.

    Raises:
        DefaultStateError: If the bank has already defaulted.
    """
    if not bank.alive:
        raise DefaultStateError(
            f"bank {bank.id} already defaulted at step {bank.default_time}",
            step=step,
            dump={"bank_id": bank.id, "default_time": bank.default_time},
        )
    return replace(bank, alive=False, default_time=step, frozen_value=float(economic_value))


# =============================================================================
# All banks at once
# =============================================================================


@dataclass
class BankBook:
    """Balance sheets of every bank as parallel arrays.

    ``default_time`` is -1 and ``frozen_value`` is NaN while a bank is alive.
    Methods return new books; arrays are never modified in place.
    """

    cash: np.ndarray
    asset_units: np.ndarray
    deposit: np.ndarray
    alive: np.ndarray
    default_time: np.ndarray
    frozen_value: np.ndarray

    @classmethod
    def from_states(cls, states: Iterable[BankState]) -> BankBook:
        states = sorted(states, key=lambda s: s.id)
        if [s.id for s in states] != list(range(len(states))):
            raise ValueError("bank ids must be 0..N-1")
        return cls(
            cash=np.array([s.cash for s in states], dtype=float),
            asset_units=np.array([s.asset_units for s in states], dtype=float),
            deposit=np.array([s.deposit for s in states], dtype=float),
            alive=np.array([s.alive for s in states], dtype=bool),
            default_time=np.array(
                [-1 if s.default_time is None else s.default_time for s in states], dtype=np.int64
            ),
            frozen_value=np.array(
                [np.nan if s.frozen_value is None else s.frozen_value for s in states], dtype=float
            ),
        )

    @property
    def n_banks(self) -> int:
        return len(self.cash)

    @property
    def n_defaults(self) -> int:
        return int(self.n_banks - np.count_nonzero(self.alive))

    def state(self, i: int) -> BankState:
        """Scalar view of bank i."""
        dead = not self.alive[i]
        return BankState(
            id=i,
            cash=float(self.cash[i]),
            asset_units=float(self.asset_units[i]),
            deposit=float(self.deposit[i]),
            alive=not dead,
            default_time=int(self.default_time[i]) if dead else None,
            frozen_value=float(self.frozen_value[i]) if dead else None,
        )

    def states(self) -> list[BankState]:
        return [self.state(i) for i in range(self.n_banks)]

    def financial_assets(self, price: float) -> np.ndarray:
        return self.asset_units * price

    def equity(self, price: float, credit: np.ndarray, debt: np.ndarray) -> np.ndarray:
        return equity_value(self.cash, self.asset_units, price, credit, debt, self.deposit)

    def apply_interest(
        self,
        rate_deposit: float,
        rate_interbank: float,
        credit: np.ndarray,
        debt: np.ndarray,
    ) -> tuple[BankBook, np.ndarray]:
        """Interest for live banks; returns the new book and the per-bank cash flow."""
        flow = np.where(
            self.alive,
            interest_flow(self.deposit, credit, debt, rate_deposit, rate_interbank),
            0.0,
        )
        return replace(self, cash=self.cash + flow), flow

    def mark_defaults(self, indices: np.ndarray, step: int, economic_values: np.ndarray) -> BankBook:
        """Vector form of ``mark_default``."""
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size == 0:
            return self
        already = indices[~self.alive[indices]]
        if already.size:
            raise DefaultStateError(
                f"banks {already.tolist()} already defaulted",
                step=step,
                dump={"bank_ids": already.tolist()},
            )
        alive = self.alive.copy()
        default_time = self.default_time.copy()
        frozen_value = self.frozen_value.copy()
        alive[indices] = False
        default_time[indices] = step
        frozen_value[indices] = economic_values
        return replace(self, alive=alive, default_time=default_time, frozen_value=frozen_value)
