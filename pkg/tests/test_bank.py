"""Tests for balance sheets, interest and default bookkeeping."""

import numpy as np
import pytest

from bankrisk.bank import (
    BankBook,
    annual_to_step_rate,
    apply_interest,
    equity,
    financial_assets,
    interest_flow,
    is_solvent,
    mark_default,
)
from bankrisk.errors import ConfigError, DefaultStateError, RateDomainError
from bankrisk.types import BankState


@pytest.fixture
def bank():
    """A bank with cash 100, 10 units and deposits 20."""
    return BankState.create(id=0, cash=100.0, asset_units=10.0, deposit=20.0)


class TestBalanceSheet:
    """Test the accounting identity and survival condition."""

    def test_financial_assets(self, bank):
        """J is units times price."""
        assert financial_assets(bank, 2.5) == 25.0

    def test_equity_identity(self, bank):
        """E = C + nS + K - L - D."""
        assert equity(bank, price=2.0, credit=50.0, debt=30.0) == 120.0

    def test_equity_may_be_negative(self, bank):
        """Large debts push equity below zero."""
        assert equity(bank, price=1.0, credit=0.0, debt=500.0) == -410.0

    def test_solvent_requires_positive_equity(self, bank):
        """Zero equity already violates the survival condition."""
        # 100 + 10 + 0 - 90 - 20 = 0
        assert not is_solvent(bank, price=1.0, credit=0.0, debt=90.0)
        assert is_solvent(bank, price=1.0, credit=0.0, debt=89.0)

    def test_negative_units_rejected(self):
        """Holdings can never start negative."""
        with pytest.raises(ValueError):
            BankState.create(id=1, cash=10.0, asset_units=-1.0, deposit=0.0)


class TestRates:
    """Test the annual-to-step rate conversion."""

    def test_deposit_rate_one_day(self):
        """1% a year is about 2.7262e-5 a day."""
        assert annual_to_step_rate(0.01, 1) == pytest.approx(2.7262e-5, abs=1e-9)

    def test_interbank_rate_one_day(self):
        """5% a year is about 1.3367e-4 a day."""
        assert annual_to_step_rate(0.05, 1) == pytest.approx(1.3367e-4, abs=1e-7)

    def test_full_year_is_identity(self):
        """A 365-day step returns the annual rate exactly."""
        assert annual_to_step_rate(0.05, 365) == 0.05

    def test_zero_rate(self):
        """Zero stays zero."""
        assert annual_to_step_rate(0.0, 1) == 0.0

    def test_compounding_is_consistent(self):
        """365 daily steps compound back to the annual rate."""
        daily = annual_to_step_rate(0.05, 1)
        assert (1 + daily) ** 365 - 1 == pytest.approx(0.05, rel=1e-9)

    @pytest.mark.parametrize("rate", [-1.0, -1.5])
    def test_rate_domain(self, rate):
        """Rates at or below -1 are rejected."""
        with pytest.raises(RateDomainError):
            annual_to_step_rate(rate, 1)

    def test_rate_domain_error_is_config_error(self):
        """Callers can catch the domain error as a config or value error."""
        with pytest.raises(ConfigError):
            annual_to_step_rate(0.01, 0)
        with pytest.raises(ValueError):
            annual_to_step_rate(0.01, -1)


class TestInterest:
    """Test interest payments."""

    def test_interest_flow(self):
        """Deposits and debt cost interest, credit earns it."""
        flow = interest_flow(deposit=100.0, credit=300.0, debt=200.0, rate_deposit=0.01, rate_interbank=0.02)
        assert flow == pytest.approx(-1.0 - 4.0 + 6.0)

    def test_apply_interest(self, bank):
        """Cash absorbs the flow; cash may go negative."""
        paid = apply_interest(bank, 0.01, 0.02, credit=0.0, debt=10_000.0)
        assert paid.cash == pytest.approx(100.0 - 0.2 - 200.0)
        assert paid.asset_units == bank.asset_units

    def test_worked_example(self):
        """C = 2500, D = 150, L = 300, K = 600 at the default daily rates."""
        bank = BankState.create(id=0, cash=2500.0, asset_units=0.0, deposit=150.0)
        paid = apply_interest(bank, 2.7262e-5, 1.3368e-4, credit=600.0, debt=300.0)
        assert paid.cash == pytest.approx(2500.0360, abs=1e-4)

    def test_defaulted_bank_accrues_nothing(self, bank):
        """Interest on a defaulted bank is an error."""
        dead = mark_default(bank, step=3, economic_value=110.0)
        with pytest.raises(DefaultStateError):
            apply_interest(dead, 0.01, 0.02, 0.0, 0.0)


class TestDefault:
    """Test freezing banks at default."""

    def test_mark_default(self, bank):
        """Defaulting records time and value."""
        dead = mark_default(bank, step=7, economic_value=42.0)
        assert not dead.alive
        assert dead.default_time == 7
        assert dead.frozen_value == 42.0
        assert dead.cash == bank.cash

    def test_double_default(self, bank):
        """A bank defaults at most once."""
        dead = mark_default(bank, step=7, economic_value=42.0)
        with pytest.raises(DefaultStateError):
            mark_default(dead, step=8, economic_value=1.0)


class TestBankBook:
    """Test the array view of all banks."""

    @pytest.fixture
    def book(self):
        """Three live banks."""
        return BankBook.from_states(
            [
                BankState.create(id=i, cash=100.0 * (i + 1), asset_units=10.0, deposit=5.0)
                for i in range(3)
            ]
        )

    def test_states_round_trip(self, book):
        """The scalar view agrees with the arrays."""
        states = book.states()
        assert [s.cash for s in states] == [100.0, 200.0, 300.0]
        assert BankBook.from_states(states).states() == states

    def test_ids_must_be_contiguous(self):
        """Bank ids index the arrays."""
        with pytest.raises(ValueError):
            BankBook.from_states([BankState.create(id=1, cash=1.0, asset_units=1.0, deposit=0.0)])

    def test_equity_matches_scalar(self, book):
        """Vector equity agrees with the single-bank formula."""
        credit = np.array([10.0, 0.0, 5.0])
        debt = np.array([0.0, 15.0, 0.0])
        expected = [equity(s, 2.0, credit[s.id], debt[s.id]) for s in book.states()]
        np.testing.assert_array_equal(book.equity(2.0, credit, debt), expected)

    def test_interest_skips_defaulted(self, book):
        """Dead banks neither pay nor receive interest."""
        book = book.mark_defaults(np.array([1]), step=2, economic_values=np.array([250.0]))
        new_book, flow = book.apply_interest(0.01, 0.01, np.full(3, 100.0), np.zeros(3))
        assert flow[1] == 0.0
        assert new_book.cash[1] == book.cash[1]
        assert flow[0] == pytest.approx(-0.05 + 1.0)

    def test_mark_defaults(self, book):
        """Marked banks are frozen with time and value."""
        book = book.mark_defaults(np.array([0, 2]), step=4, economic_values=np.array([1.0, 3.0]))
        assert book.n_defaults == 2
        assert book.state(0).default_time == 4
        assert book.state(2).frozen_value == 3.0
        assert book.state(1).alive

    def test_mark_defaults_twice(self, book):
        """Re-defaulting any bank raises."""
        book = book.mark_defaults(np.array([0]), step=4, economic_values=np.array([1.0]))
        with pytest.raises(DefaultStateError):
            book.mark_defaults(np.array([0, 1]), step=5, economic_values=np.array([1.0, 1.0]))

    def test_methods_do_not_mutate(self, book):
        """Books are replaced, not modified."""
        before = book.cash.copy()
        book.apply_interest(0.5, 0.5, np.zeros(3), np.zeros(3))
        book.mark_defaults(np.array([0]), step=1, economic_values=np.array([0.0]))
        np.testing.assert_array_equal(book.cash, before)
        assert book.alive.all()
