"""Core types for the bankrisk simulator."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal

import numpy as np

if TYPE_CHECKING:
    from bankrisk.config import SimConfig
    from bankrisk.network import ExposureMatrix


Attitude = Literal[-1, 0, 1]
DefaultTrigger = Literal["market", "contagion"]

BUY: Attitude = 1
WAIT: Attitude = 0
SELL: Attitude = -1


@dataclass(frozen=True)
class BankState:
    """Balance sheet of a single bank.

    Credit and debt are not stored here; they are row and column sums of the
    exposure matrix. Once ``alive`` is false every field is frozen.
    """

    id: int
    cash: float
    asset_units: float
    deposit: float
    alive: bool = True
    default_time: int | None = None
    frozen_value: float | None = None

    @classmethod
    def create(cls, id: int, cash: float, asset_units: float, deposit: float) -> BankState:
        """Factory for a live bank; rejects negative holdings."""
        if asset_units < 0:
            raise ValueError(f"bank {id}: asset_units must be non-negative, got {asset_units}")
        return cls(id=id, cash=float(cash), asset_units=float(asset_units), deposit=float(deposit))


@dataclass(frozen=True)
class BankBehavior:
    """Response-curve parameters of one bank's trading desk."""

    theta1: float
    theta2: float
    a: float
    sigma: float

    def __post_init__(self) -> None:
        if not self.theta1 < self.theta2:
            raise ValueError(f"theta1 ({self.theta1}) must be below theta2 ({self.theta2})")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def is_trend_follower(self) -> bool:
        return self.a > 0


@dataclass(frozen=True)
class MarketState:
    """State of the single risky-asset market.

    ``log_price`` is the exact state; ``price`` is its exponential, floored at
    the smallest positive normal double. ``floor_reported`` is set once the
    floor has been logged, so a run warns about it only once.
    """

    price: float
    last_return: float
    gamma: float
    eta: float
    log_price: float
    floor_reported: bool = False

    @classmethod
    def create(cls, price: float, gamma: float, eta: float) -> MarketState:
        if not price > 0:
            raise ValueError(f"price must be positive, got {price}")
        return cls(
            price=float(price),
            last_return=0.0,
            gamma=float(gamma),
            eta=float(eta),
            log_price=float(np.log(price)),
        )


@dataclass(frozen=True)
class Order:
    """One bank's order for the current step."""

    attitude: Attitude
    volume: float

    def __post_init__(self) -> None:
        if self.attitude not in (-1, 0, 1):
            raise ValueError(f"attitude must be -1, 0 or 1, got {self.attitude}")
        if self.volume < 0:
            raise ValueError(f"volume must be non-negative, got {self.volume}")


@dataclass
class CascadeResult:
    """Fixed point of the default cascade."""

    defaulted: np.ndarray
    cumulative_loss: np.ndarray
    updated_exposures: ExposureMatrix
    iterations: int
    loss_per_bank: np.ndarray | None = None
    total_loss: float = 0.0

    @property
    def default_indices(self) -> np.ndarray:
        return np.flatnonzero(self.defaulted)


@dataclass
class DefaultEvent:
    """A bank leaving the system."""

    step: int
    bank_id: int
    trigger: DefaultTrigger
    cascade_iterations: int
    economic_value: float


@dataclass
class StepMetrics:
    """Observables recorded after one step."""

    step: int
    price: float
    log_price: float
    log_return: float
    total_cash: float
    total_units: float
    cumulative_loss: float
    direct_loss: float
    car_per_bank: np.ndarray
    cear_per_bank: np.ndarray
    alive: np.ndarray
    n_defaults_so_far: int


@dataclass
class StepReport:
    """Everything one step did, for recording and for ledger replay."""

    metrics: StepMetrics
    attitudes: np.ndarray
    volumes: np.ndarray
    excess_demand: float
    settlement_price: float
    interest: np.ndarray
    events: list[DefaultEvent] = field(default_factory=list)
    cascade: CascadeResult | None = None


@dataclass
class RunOutcome:
    """Compact result of one run, as consumed by ensemble statistics."""

    seed: int
    horizon: int
    alpha: float
    default_times: np.ndarray
    final_loss: float
    direct_loss: float
    n_defaults: int
    return_volatility: float
    final_price: float


@dataclass
class RunRecord:
    """Full time series of one run plus its metadata."""

    config: SimConfig
    seed: int
    config_hash: str
    rng_algorithm: str
    alpha: float
    price: np.ndarray
    log_price: np.ndarray
    log_return: np.ndarray
    total_cash: np.ndarray
    total_units: np.ndarray
    cumulative_loss: np.ndarray
    direct_loss: np.ndarray
    n_defaults: np.ndarray
    car: np.ndarray
    cear: np.ndarray
    alive: np.ndarray
    default_times: np.ndarray
    events: list[DefaultEvent] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.price) - 1

    @property
    def n_banks(self) -> int:
        return self.car.shape[1]

    @property
    def return_volatility(self) -> float:
        """Standard deviation of the per-step log returns (0 for fewer than two steps)."""
        returns = self.log_return[1:]
        if len(returns) < 2:
            return 0.0
        return float(np.std(returns, ddof=1))

    def outcome(self) -> RunOutcome:
        return RunOutcome(
            seed=self.seed,
            horizon=self.n_steps,
            alpha=self.alpha,
            default_times=self.default_times.copy(),
            final_loss=float(self.cumulative_loss[-1]),
            direct_loss=float(self.direct_loss[-1]),
            n_defaults=int(self.n_defaults[-1]),
            return_volatility=self.return_volatility,
            final_price=float(self.price[-1]),
        )


@dataclass
class EnsembleSummary:
    """Aggregated Monte Carlo statistics over runs that share a config."""

    config_hash: str
    seeds: list[int]
    horizon: int
    default_probability: np.ndarray
    systemic_k: int
    systemic_default_probability: float
    systemic_by_horizon: dict[int, float]
    alpha_mean: float
    volatility_mean: float
    loss_mean: float
    loss_quantiles: dict[str, float]
    default_count_mean: float
    default_count_quantiles: dict[str, float]
    outcomes: list[RunOutcome] = field(default_factory=list)

    @property
    def n_runs(self) -> int:
        return len(self.seeds)


@dataclass
class SweepRow:
    """One parameter value of a sweep."""

    parameter: str
    value: Any
    runs: int
    alpha_mean: float
    volatility_mean: float
    loss_mean: float
    default_count_mean: float
    systemic_default_probability: float


@dataclass
class OutputBundle:
    """Paths of the files written for one run."""

    directory: Path
    timeseries: Path
    bank_panel: Path
    events: Path
    summary: Path
