"""Tests for Monte Carlo ensembles and sweeps."""

import random

import numpy as np
import pytest

from bankrisk.config import SimConfig, config_hash
from bankrisk.engine import run
from bankrisk.ensemble import monte_carlo, quartile_horizons, summarize_ensemble, sweep
from bankrisk.errors import ConfigError, EnsembleError
from bankrisk.types import RunOutcome

# bank 0 defaults in seeds 0, 3 and 6; bank 1 in seed 1 at step 80
PLANTED_DEFAULTS = {0: [10, -1], 1: [-1, 80], 3: [50, -1], 6: [99, -1]}


def planted_runner(config: SimConfig) -> RunOutcome:
    """Synthetic outcome per seed, no simulation."""
    times = np.array(PLANTED_DEFAULTS.get(config.seed, [-1, -1]), dtype=np.int64)
    return RunOutcome(
        seed=config.seed,
        horizon=100,
        alpha=0.5 + 0.01 * config.seed,
        default_times=times,
        final_loss=float(10 * config.seed),
        direct_loss=0.0,
        n_defaults=int(np.count_nonzero(times >= 0)),
        return_volatility=0.1 * config.seed,
        final_price=1.0,
    )


def failing_runner(config: SimConfig) -> RunOutcome:
    """Fails for seed 2."""
    if config.seed == 2:
        raise RuntimeError("boom")
    return planted_runner(config)


def _assert_same_summary(a, b):
    assert a.seeds == b.seeds
    np.testing.assert_array_equal(a.default_probability, b.default_probability)
    assert a.systemic_default_probability == b.systemic_default_probability
    assert a.systemic_by_horizon == b.systemic_by_horizon
    assert a.alpha_mean == b.alpha_mean
    assert a.volatility_mean == b.volatility_mean
    assert a.loss_mean == b.loss_mean
    assert a.loss_quantiles == b.loss_quantiles
    assert a.default_count_quantiles == b.default_count_quantiles


class TestMonteCarlo:
    """Test the ensemble driver."""

    def test_planted_frequencies(self):
        """Default probabilities reproduce the planted outcomes exactly."""
        config = SimConfig(n_banks=2, avg_links=1)
        summary = monte_carlo(config, runs=10, base_seed=0, runner=planted_runner)
        assert summary.n_runs == 10
        assert summary.seeds == list(range(10))
        np.testing.assert_array_equal(summary.default_probability, [0.3, 0.1])
        assert summary.systemic_default_probability == pytest.approx(0.4)
        assert summary.systemic_by_horizon == {25: 0.1, 50: 0.2, 75: 0.2, 100: 0.4}
        assert summary.loss_mean == pytest.approx(45.0)
        assert summary.default_count_mean == pytest.approx(0.4)

    def test_systemic_k(self):
        """k counts defaults per run."""
        config = SimConfig(n_banks=2, avg_links=1, systemic_k=2)
        summary = monte_carlo(config, runs=10, base_seed=0, runner=planted_runner)
        assert summary.systemic_default_probability == 0.0

    def test_base_seed(self):
        """Seeds run from base_seed upwards."""
        summary = monte_carlo(SimConfig(n_banks=2, avg_links=1), runs=3, base_seed=5, runner=planted_runner)
        assert summary.seeds == [5, 6, 7]
        np.testing.assert_allclose(summary.default_probability, [1 / 3, 0.0])

    def test_single_run_matches_run(self, small_config):
        """An ensemble of one is that run's outcome."""
        summary = monte_carlo(small_config, runs=1)
        record = run(small_config)
        outcome = summary.outcomes[0]
        assert outcome.seed == small_config.seed
        assert outcome.final_loss == record.cumulative_loss[-1]
        assert outcome.return_volatility == record.return_volatility
        np.testing.assert_array_equal(outcome.default_times, record.default_times)
        np.testing.assert_array_equal(summary.default_probability, record.default_times >= 0)
        assert summary.config_hash == config_hash(small_config)

    def test_order_independent(self):
        """Shuffling the outcomes leaves every aggregate unchanged."""
        outcomes = [planted_runner(SimConfig(seed=s)) for s in range(10)]
        shuffled = outcomes[:]
        random.Random(4).shuffle(shuffled)
        _assert_same_summary(summarize_ensemble(outcomes, "h"), summarize_ensemble(shuffled, "h"))

    def test_workers_match_sequential(self, small_config):
        """Parallel runs give the same summary as sequential ones."""
        sequential = monte_carlo(small_config, runs=3, workers=1)
        parallel = monte_carlo(small_config, runs=3, workers=2)
        _assert_same_summary(sequential, parallel)

    def test_failed_run_names_seed(self):
        """A failing run aborts the ensemble with its seed."""
        with pytest.raises(EnsembleError) as exc_info:
            monte_carlo(SimConfig(), runs=4, base_seed=0, runner=failing_runner)
        assert exc_info.value.seed == 2
        assert isinstance(exc_info.value.__cause__, RuntimeError)

    def test_needs_runs(self):
        """At least one run."""
        with pytest.raises(ValueError):
            monte_carlo(SimConfig(), runs=0, runner=planted_runner)


class TestSummary:
    """Test the reduction helpers."""

    def test_quartile_horizons(self):
        """T/4, T/2, 3T/4 and T without duplicates."""
        assert quartile_horizons(100) == [25, 50, 75, 100]
        assert quartile_horizons(3) == [0, 1, 2, 3]
        assert quartile_horizons(0) == [0]

    def test_mixed_horizons(self):
        """Outcomes must share a horizon."""
        a = planted_runner(SimConfig(seed=0))
        b = planted_runner(SimConfig(seed=1))
        b.horizon = 50
        with pytest.raises(ValueError, match="horizons"):
            summarize_ensemble([a, b], "h")

    def test_quantiles(self):
        """Median of losses 0, 10, ..., 90 is 45."""
        outcomes = [planted_runner(SimConfig(seed=s)) for s in range(10)]
        summary = summarize_ensemble(outcomes, "h")
        assert summary.loss_quantiles["q50"] == pytest.approx(45.0)
        assert set(summary.loss_quantiles) == {"q05", "q25", "q50", "q75", "q95"}


class TestSweep:
    """Test parameter sweeps."""

    def test_one_row_per_value(self):
        """Each value gives one row."""
        rows = sweep(SimConfig(n_banks=2, avg_links=1), "a0", [-1.0, -0.8, -0.55], 5, base_seed=0, runner=planted_runner)
        assert [r.value for r in rows] == [-1.0, -0.8, -0.55]
        assert all(r.runs == 5 for r in rows)
        assert all(r.parameter == "a0" for r in rows)

    def test_single_value_single_run(self, small_config):
        """values=[x] with one run reproduces that run."""
        rows = sweep(small_config, "gamma", [0.05], 1)
        record = run(small_config.model_copy(update={"gamma": 0.05}))
        assert rows[0].loss_mean == record.cumulative_loss[-1]
        assert rows[0].alpha_mean == record.alpha
        assert rows[0].volatility_mean == record.return_volatility

    def test_unknown_parameter(self):
        """Only config fields can be swept."""
        with pytest.raises(ConfigError, match="unknown sweep parameter"):
            sweep(SimConfig(), "temperature", [1.0], 1, runner=planted_runner)

    def test_invalid_value(self):
        """Values are validated like any config."""
        with pytest.raises(ConfigError, match="eta"):
            sweep(SimConfig(), "eta", [2.0], 1, runner=planted_runner)
