"""Property-based tests for the market, network and cascade."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from bankrisk.cascade import run_cascade
from bankrisk.market import BehaviorTable, clamp_feasible, prob_buy, prob_sell, prob_wait, settle_many
from bankrisk.network import ExposureMatrix, write_off_defaults
from bankrisk.types import BankBehavior

finite = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)


@st.composite
def behaviors(draw, a=st.floats(min_value=-5.0, max_value=5.0)):
    theta1 = draw(st.floats(min_value=-5.0, max_value=4.0))
    gap = draw(st.floats(min_value=1e-3, max_value=5.0))
    sigma = draw(st.floats(min_value=0.05, max_value=10.0))
    return BankBehavior(theta1=theta1, theta2=theta1 + gap, a=draw(a), sigma=sigma)


@st.composite
def exposures(draw, max_banks=8):
    n = draw(st.integers(min_value=1, max_value=max_banks))
    w = np.array(
        draw(
            st.lists(
                st.one_of(st.just(0.0), st.floats(min_value=0.0, max_value=500.0)),
                min_size=n * n,
                max_size=n * n,
            )
        )
    ).reshape(n, n)
    np.fill_diagonal(w, 0.0)
    return ExposureMatrix(w)


class TestProbabilityProperties:
    """Test the attitude probabilities over random behaviours."""

    @given(behaviors(), finite)
    def test_bounds_and_sum(self, b, r):
        """Each probability lies in [0, 1] and the three sum to one."""
        p = (prob_buy(r, b), prob_wait(r, b), prob_sell(r, b))
        assert all(0.0 <= x <= 1.0 for x in p)
        assert math.isclose(sum(p), 1.0, abs_tol=1e-12)

    @given(behaviors(), st.floats(min_value=-2.0, max_value=2.0))
    def test_strict_bounds_near_thresholds(self, b, r):
        """Away from the far tails every attitude keeps some probability."""
        scale = math.sqrt(2.0) * b.sigma
        u = (b.theta2 - b.a * r) / scale
        v = (b.a * r - b.theta1) / scale
        assume(abs(u) <= 5 and abs(v) <= 5)
        assert 0.0 < prob_buy(r, b) < 1.0
        assert 0.0 < prob_sell(r, b) < 1.0
        if u + v >= 0.01:
            assert 0.0 < prob_wait(r, b) < 1.0

    @given(behaviors(a=st.floats(min_value=0.01, max_value=5.0)), finite, finite)
    def test_trend_followers_monotone(self, b, r1, r2):
        """For a > 0, buying grows and selling shrinks with the return."""
        lo, hi = sorted((r1, r2))
        assert prob_buy(lo, b) <= prob_buy(hi, b)
        assert prob_sell(lo, b) >= prob_sell(hi, b)

    @given(behaviors(a=st.floats(min_value=-5.0, max_value=-0.01)), finite, finite)
    def test_contrarians_monotone(self, b, r1, r2):
        """For a < 0, buying shrinks and selling grows with the return."""
        lo, hi = sorted((r1, r2))
        assert prob_buy(lo, b) >= prob_buy(hi, b)
        assert prob_sell(lo, b) <= prob_sell(hi, b)


class TestProbabilitySweep:
    """Test the probability bounds over a dense vectorised sweep."""

    N_CASES = 200_000

    @pytest.fixture(scope="class")
    def sweep(self):
        """Random behaviours with two returns each, evaluated in one pass."""
        rng = np.random.default_rng(20)
        n = self.N_CASES
        theta1 = rng.uniform(-5.0, 5.0, n)
        table = BehaviorTable(
            theta1=theta1,
            theta2=theta1 + rng.uniform(0.05, 5.0, n),
            a=rng.uniform(-3.0, 3.0, n),
            sigma=rng.uniform(0.1, 10.0, n),
        )
        r1, r2 = np.sort(rng.uniform(-5.0, 5.0, (2, n)), axis=0)
        return table, r1, r2

    def test_closed_bounds(self, sweep):
        """Every probability lies in [0, 1] and the three sum to one."""
        table, r, _ = sweep
        buy, wait, sell = prob_buy(r, table), prob_wait(r, table), prob_sell(r, table)
        for p in (buy, wait, sell):
            assert np.all((p >= 0.0) & (p <= 1.0))
        np.testing.assert_allclose(buy + wait + sell, 1.0, atol=1e-12)

    def test_buy_and_sell_leave_room_to_wait(self, sweep):
        """Away from the far tails p_buy + p_sell stays strictly below one."""
        table, r, _ = sweep
        scale = math.sqrt(2.0) * table.sigma
        u = (table.theta2 - table.a * r) / scale
        v = (table.a * r - table.theta1) / scale
        inner = (np.abs(u) <= 5) & (np.abs(v) <= 5)
        assert inner.sum() > 10_000
        buy, sell = prob_buy(r, table)[inner], prob_sell(r, table)[inner]
        assert np.all((buy > 0) & (buy < 1))
        assert np.all((sell > 0) & (sell < 1))
        assert np.all(buy + sell < 1.0)

    def test_monotone_in_scaled_return(self, sweep):
        """p_buy rises and p_sell falls with a * R."""
        table, r1, r2 = sweep
        x1, x2 = table.a * r1, table.a * r2
        lo = np.where(x1 <= x2, r1, r2)
        hi = np.where(x1 <= x2, r2, r1)
        assert np.all(prob_buy(lo, table) <= prob_buy(hi, table))
        assert np.all(prob_sell(lo, table) >= prob_sell(hi, table))


class TestSettlementProperties:
    """Test that clamped orders always settle within the ledger."""

    @given(
        st.lists(
            st.tuples(
                st.sampled_from([-1, 0, 1]),
                st.floats(min_value=0.0, max_value=100.0),
                st.floats(min_value=0.0, max_value=1000.0),
                st.floats(min_value=0.0, max_value=1000.0),
            ),
            min_size=1,
            max_size=20,
        ),
        st.floats(min_value=0.01, max_value=20.0),
    )
    def test_feasible_orders_settle(self, rows, price):
        """After clamping, settlement never overdraws cash or holdings."""
        attitudes, volumes, cash, units = (np.array(c) for c in zip(*rows))
        attitudes = clamp_feasible(attitudes, volumes, cash, units, price)
        new_cash, new_units = settle_many(cash, units, attitudes, volumes, price)
        assert np.all(new_cash >= 0)
        assert np.all(new_units >= 0)
        np.testing.assert_allclose(new_units - units, attitudes * volumes, atol=1e-9)


class TestNetworkProperties:
    """Test write-offs over random networks."""

    @given(exposures(), st.data())
    def test_write_off_idempotent(self, W, data):
        """Writing off the same banks twice changes nothing more."""
        idx = data.draw(st.lists(st.integers(0, W.n_banks - 1), max_size=W.n_banks))
        once = write_off_defaults(W, idx)
        assert write_off_defaults(once, idx) == once
        for i in idx:
            assert once.credits()[i] == 0.0
            assert once.debts()[i] == 0.0


class TestCascadeProperties:
    """Test the cascade over random networks and balance sheets."""

    @settings(max_examples=200)
    @given(exposures(), st.data())
    def test_fixed_point(self, W, data):
        """No survivor is left whose losses exceed its equity."""
        n = W.n_banks
        equity = np.array(data.draw(st.lists(st.floats(0.0, 1000.0), min_size=n, max_size=n)))
        initial = data.draw(st.sets(st.integers(0, n - 1)))
        result = run_cascade(W, equity, initial)
        survivors = ~result.defaulted
        assert not np.any(survivors & (result.cumulative_loss > 0) & (result.cumulative_loss > equity))
        assert result.defaulted[list(initial)].all()
        assert result.updated_exposures.weights[:, result.defaulted].sum() == 0.0

    @settings(max_examples=200)
    @given(exposures(), st.data())
    def test_more_initial_defaults_never_fewer_final(self, W, data):
        """Growing the initial set can only grow the final set."""
        n = W.n_banks
        equity = np.array(data.draw(st.lists(st.floats(0.0, 1000.0), min_size=n, max_size=n)))
        small = data.draw(st.sets(st.integers(0, n - 1)))
        extra = data.draw(st.sets(st.integers(0, n - 1)))
        a = run_cascade(W, equity, small).defaulted
        b = run_cascade(W, equity, small | extra).defaulted
        assert np.all(b[a])

    @given(exposures(), st.data())
    def test_losses_bounded_by_exposure(self, W, data):
        """A bank never loses more than it lent."""
        n = W.n_banks
        equity = np.array(data.draw(st.lists(st.floats(0.0, 1000.0), min_size=n, max_size=n)))
        initial = data.draw(st.sets(st.integers(0, n - 1)))
        result = run_cascade(W, equity, initial)
        assert np.all(result.cumulative_loss <= W.credits() + 1e-9)
