"""Simulation loop: initialization, the per-step pipeline and full runs.

One step does, in order:

1. every live bank draws an attitude from the last log return;
2. volumes eta * E from the current exposures and price S(t);
3. orders that cannot be executed at S(t) are turned into waiting;
4. the feasible excess demand moves the price to S(t+dt);
5. trades settle at S(t);
6. interest is paid and received;
7. holdings are marked at S(t+dt) and banks with E <= 0 default;
8. those defaults seed a cascade, defaulted banks are frozen and written off;
9. ratios and aggregates are recorded.
"""

from __future__ import annotations

import copy
import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from bankrisk.bank import BankBook
from bankrisk.cascade import run_cascade
from bankrisk.config import SimConfig, config_hash
from bankrisk.errors import ConfigError, InvariantViolation
from bankrisk.market import (
    BehaviorTable,
    clamp_feasible,
    draw_attitudes,
    net_demand,
    settle_many,
    trade_volume,
    update_price,
)
from bankrisk.metrics import alpha, car, cear, totals
from bankrisk.network import ExposureMatrix, generate_network, load_network_csv, write_off_defaults
from bankrisk.rng import RNG_ALGORITHM, make_rng
from bankrisk.types import (
    BankBehavior,
    BankState,
    DefaultEvent,
    MarketState,
    RunRecord,
    StepMetrics,
    StepReport,
)

logger = logging.getLogger(__name__)


@dataclass
class SimState:
    """Everything needed to advance a run by one step.

    ``frozen_car`` and ``frozen_cear`` hold the ratios of defaulted banks at
    their default step (NaN while alive).
    """

    step: int
    book: BankBook
    behaviors: BehaviorTable
    exposures: ExposureMatrix
    market: MarketState
    rng: np.random.Generator
    cumulative_loss: float = 0.0
    direct_loss: float = 0.0
    frozen_car: np.ndarray | None = None
    frozen_cear: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = self.book.n_banks
        if self.behaviors.n_banks != n or self.exposures.n_banks != n:
            raise ValueError(
                f"state sizes disagree: {n} banks, {self.behaviors.n_banks} behaviors, "
                f"{self.exposures.n_banks}x{self.exposures.n_banks} exposures"
            )
        if self.frozen_car is None:
            self.frozen_car = np.full(n, np.nan)
        if self.frozen_cear is None:
            self.frozen_cear = np.full(n, np.nan)

    @classmethod
    def from_parts(
        cls,
        banks: Sequence[BankState],
        behaviors: Sequence[BankBehavior],
        exposures: ExposureMatrix,
        market: MarketState,
        seed: int = 0,
    ) -> SimState:
        """Assemble a state from hand-built records, e.g. for a scripted scenario."""
        return cls(
            step=0,
            book=BankBook.from_states(banks),
            behaviors=BehaviorTable.from_behaviors(behaviors),
            exposures=exposures,
            market=market,
            rng=make_rng(seed),
        )

    @property
    def n_banks(self) -> int:
        return self.book.n_banks

    @property
    def banks(self) -> list[BankState]:
        return self.book.states()


# =============================================================================
# Initialization
# =============================================================================


def init_simulation(config: SimConfig) -> SimState:
    """Sample banks and the network for ``config.seed``.

    Bank parameters are drawn bank by bank in index order, each bank taking
    (theta1, theta2, a, sigma, cash, units, deposit) from its uniform range;
    the network is drawn afterwards from the same stream unless
    ``config.network_path`` names a fixed matrix.

    Raises:
        ConfigError: If the network file does not match ``n_banks``.
    """
    rng = make_rng(config.seed)
    n = config.n_banks
    lows = np.array(
        [
            config.theta1_low,
            config.theta2_low,
            config.a0,
            config.sigma_low,
            config.cash_low,
            config.units_low,
            config.deposit_low,
        ]
    )
    highs = np.array(
        [
            config.theta1_high,
            config.theta2_high,
            config.a_high,
            config.sigma_high,
            config.cash_high,
            config.units_high,
            config.deposit_high,
        ]
    )
    draws = lows + (highs - lows) * rng.random((n, len(lows)))
    theta1, theta2, a, sigma, cash, units, deposit = draws.T

    if config.network_path:
        exposures = load_network_csv(config.network_path)
        if exposures.n_banks != n:
            raise ConfigError(
                f"network file {config.network_path} holds {exposures.n_banks} banks, config has {n}"
            )
    else:
        exposures = generate_network(n, config.avg_links, config.weight_low, config.weight_high, rng)

    book = BankBook(
        cash=cash.copy(),
        asset_units=units.copy(),
        deposit=deposit.copy(),
        alive=np.ones(n, dtype=bool),
        default_time=np.full(n, -1, dtype=np.int64),
        frozen_value=np.full(n, np.nan),
    )
    behaviors = BehaviorTable(theta1=theta1.copy(), theta2=theta2.copy(), a=a.copy(), sigma=sigma.copy())
    market = MarketState.create(config.initial_price, config.gamma, config.eta)
    return SimState(
        step=0,
        book=book,
        behaviors=behaviors,
        exposures=exposures,
        market=market,
        rng=rng,
    )


# =============================================================================
# Stepping
# =============================================================================


def _ratios(
    state: SimState,
    config: SimConfig,
    attitudes: np.ndarray,
    volumes: np.ndarray,
    settlement_price: float,
) -> tuple[np.ndarray, np.ndarray]:
    """CAR and CEAR of every bank; defaulted banks report their frozen values."""
    book, W = state.book, state.exposures
    J = book.financial_assets(state.market.price)
    K = W.credits()
    car_pct = car(book.cash, J, K, W.debts(), book.deposit)
    cear_pct = cear(
        book.cash, J, K, attitudes, volumes, settlement_price, config.cear_c, config.rate_interbank
    )
    car_pct = np.where(book.alive, car_pct, state.frozen_car)
    cear_pct = np.where(book.alive, cear_pct, state.frozen_cear)
    return car_pct, cear_pct


def snapshot(state: SimState, config: SimConfig) -> StepMetrics:
    """Metrics of ``state`` as it stands, with no trading in progress."""
    n = state.n_banks
    car_pct, cear_pct = _ratios(state, config, np.zeros(n, dtype=np.int8), np.zeros(n), state.market.price)
    total_cash, total_units = totals(state.book)
    return StepMetrics(
        step=state.step,
        price=state.market.price,
        log_price=state.market.log_price,
        log_return=state.market.last_return,
        total_cash=total_cash,
        total_units=total_units,
        cumulative_loss=state.cumulative_loss,
        direct_loss=state.direct_loss,
        car_per_bank=car_pct,
        cear_per_bank=cear_pct,
        alive=state.book.alive.copy(),
        n_defaults_so_far=state.book.n_defaults,
    )


def _advance(state: SimState, config: SimConfig) -> tuple[SimState, StepReport]:
    t = state.step + 1
    book, W, market = state.book, state.exposures, state.market
    n = book.n_banks
    price = market.price
    alive_idx = np.flatnonzero(book.alive)

    credit, debt = W.credits(), W.debts()
    equity = book.equity(price, credit, debt)

    attitudes = np.zeros(n, dtype=np.int8)
    volumes = np.zeros(n)
    attitudes[alive_idx] = draw_attitudes(
        market.last_return, state.behaviors.subset(alive_idx), state.rng
    )
    volumes[alive_idx] = trade_volume(equity[alive_idx], market.eta)
    attitudes = clamp_feasible(attitudes, volumes, book.cash, book.asset_units, price)
    excess = net_demand(attitudes, volumes)

    market = update_price(market, excess)
    cash, units = settle_many(book.cash, book.asset_units, attitudes, volumes, price, step=t)
    book = replace(book, cash=cash, asset_units=units)
    book, interest = book.apply_interest(config.rate_deposit, config.rate_interbank, credit, debt)

    new_price = market.price
    equity = book.equity(new_price, credit, debt)
    market_defaults = book.alive & (equity <= 0)

    frozen_car, frozen_cear = state.frozen_car, state.frozen_cear
    cumulative_loss, direct_loss = state.cumulative_loss, state.direct_loss
    events: list[DefaultEvent] = []
    cascade = None
    if market_defaults.any():
        economic_value = book.cash + book.financial_assets(new_price) + credit
        cascade = run_cascade(W, equity, np.flatnonzero(market_defaults), economic_value)
        idx = cascade.default_indices
        remaining_credit = credit - cascade.cumulative_loss

        frozen_car, frozen_cear = frozen_car.copy(), frozen_cear.copy()
        J = book.financial_assets(new_price)
        frozen_car[idx] = car(book.cash[idx], J[idx], remaining_credit[idx], debt[idx], book.deposit[idx])
        frozen_cear[idx] = cear(
            book.cash[idx],
            J[idx],
            remaining_credit[idx],
            attitudes[idx],
            volumes[idx],
            price,
            config.cear_c,
            config.rate_interbank,
        )

        book = book.mark_defaults(idx, t, economic_value[idx])
        W = write_off_defaults(W, idx)
        cumulative_loss += cascade.total_loss
        direct_loss += float(economic_value[idx].sum())
        events = [
            DefaultEvent(
                step=t,
                bank_id=int(i),
                trigger="market" if market_defaults[i] else "contagion",
                cascade_iterations=cascade.iterations,
                economic_value=float(economic_value[i]),
            )
            for i in idx
        ]
        logger.debug(
            f"Step {t}: {int(market_defaults.sum())} market and "
            f"{len(idx) - int(market_defaults.sum())} contagion defaults"
        )

    new_state = replace(
        state,
        step=t,
        book=book,
        exposures=W,
        market=market,
        cumulative_loss=cumulative_loss,
        direct_loss=direct_loss,
        frozen_car=frozen_car,
        frozen_cear=frozen_cear,
    )
    car_pct, cear_pct = _ratios(new_state, config, attitudes, volumes, price)
    total_cash, total_units = totals(book)
    metrics = StepMetrics(
        step=t,
        price=new_price,
        log_price=market.log_price,
        log_return=market.last_return,
        total_cash=total_cash,
        total_units=total_units,
        cumulative_loss=cumulative_loss,
        direct_loss=direct_loss,
        car_per_bank=car_pct,
        cear_per_bank=cear_pct,
        alive=book.alive.copy(),
        n_defaults_so_far=book.n_defaults,
    )
    report = StepReport(
        metrics=metrics,
        attitudes=attitudes,
        volumes=volumes,
        excess_demand=excess,
        settlement_price=price,
        interest=interest,
        events=events,
        cascade=cascade,
    )
    return new_state, report


def step(state: SimState, config: SimConfig) -> tuple[SimState, StepReport]:
    """Advance one step.

    The input state is left untouched, its generator included, so stepping
    the same state twice gives the same result.

    Returns:
        The next state and a report of what happened during the step.

    Raises:
        InvariantViolation: If settlement or the price update breaks the
            ledger; the error carries the step index and a value dump.
    """
    forked = replace(state, rng=copy.deepcopy(state.rng))
    return _checked_advance(forked, config)


def _checked_advance(state: SimState, config: SimConfig) -> tuple[SimState, StepReport]:
    try:
        return _advance(state, config)
    except InvariantViolation as e:
        if e.step is not None:
            raise
        raise type(e)(str(e), step=state.step + 1, dump=e.dump) from e


# =============================================================================
# Runs
# =============================================================================


def run(config: SimConfig, state: SimState | None = None) -> RunRecord:
    """Initialize (unless ``state`` is given) and advance ``config.horizon_steps`` steps.

    Row 0 of every series is the initial snapshot.
    """
    state = init_simulation(config) if state is None else state
    horizon = config.horizon_steps
    n = state.n_banks
    digest = config_hash(config)
    logger.info(f"Run start: seed={config.seed} steps={horizon} banks={n} config={digest}")

    rows = horizon + 1
    price = np.empty(rows)
    log_price = np.empty(rows)
    log_return = np.empty(rows)
    total_cash = np.empty(rows)
    total_units = np.empty(rows)
    cumulative_loss = np.empty(rows)
    direct_loss = np.empty(rows)
    n_defaults = np.empty(rows, dtype=np.int64)
    car_pct = np.empty((rows, n))
    cear_pct = np.empty((rows, n))
    alive = np.empty((rows, n), dtype=bool)
    events: list[DefaultEvent] = []

    def record(row: int, m: StepMetrics) -> None:
        price[row] = m.price
        log_price[row] = m.log_price
        log_return[row] = m.log_return
        total_cash[row] = m.total_cash
        total_units[row] = m.total_units
        cumulative_loss[row] = m.cumulative_loss
        direct_loss[row] = m.direct_loss
        n_defaults[row] = m.n_defaults_so_far
        car_pct[row] = m.car_per_bank
        cear_pct[row] = m.cear_per_bank
        alive[row] = m.alive

    record(0, snapshot(state, config))
    warned_empty = state.book.n_defaults == n
    for row in range(1, rows):
        state, report = _checked_advance(state, config)
        record(row, report.metrics)
        events.extend(report.events)
        if not warned_empty and report.metrics.n_defaults_so_far == n:
            logger.warning(f"Every bank has defaulted by step {state.step}")
            warned_empty = True

    result = RunRecord(
        config=config,
        seed=config.seed,
        config_hash=digest,
        rng_algorithm=RNG_ALGORITHM,
        alpha=alpha(state.behaviors),
        price=price,
        log_price=log_price,
        log_return=log_return,
        total_cash=total_cash,
        total_units=total_units,
        cumulative_loss=cumulative_loss,
        direct_loss=direct_loss,
        n_defaults=n_defaults,
        car=car_pct,
        cear=cear_pct,
        alive=alive,
        default_times=state.book.default_time.copy(),
        events=events,
    )
    logger.info(
        f"Run finish: seed={config.seed} defaults={int(n_defaults[-1])} "
        f"H={cumulative_loss[-1]:.6g} final price={price[-1]:.6g}"
    )
    return result
