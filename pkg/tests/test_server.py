"""Integration tests for the MCP server."""

import os
from unittest.mock import patch

import pytest

from bankrisk import server

SMALL = {"n_banks": 8, "avg_links": 3}


@pytest.fixture
def output_env(temp_dir):
    """Send tool outputs to a temporary directory."""
    with patch.dict(os.environ, {"BANKRISK_OUTPUT_DIR": str(temp_dir)}):
        yield temp_dir


class TestMCPTools:
    """Test MCP tool functions."""

    @pytest.mark.asyncio
    async def test_bankrisk_run(self, output_env):
        """A run reports its seed and writes files to the output directory."""
        result = await server.bankrisk_run(seed=3, steps=20, settings=SMALL)

        assert result.startswith("# bankrisk run")
        assert "- Seed: 3" in result
        assert "- Steps: 20" in result
        assert (output_env / "timeseries.csv").exists()

    @pytest.mark.asyncio
    async def test_bankrisk_run_explicit_out(self, temp_dir):
        """out overrides the environment."""
        result = await server.bankrisk_run(steps=5, settings=SMALL, out=str(temp_dir / "x"))

        assert str(temp_dir / "x") in result
        assert (temp_dir / "x" / "summary.json").exists()

    @pytest.mark.asyncio
    async def test_bankrisk_run_bad_config(self, output_env):
        """Invalid settings come back as a configuration report."""
        result = await server.bankrisk_run(settings={"eta": 5, "gamma": -1})

        assert result.startswith("# Configuration error")
        assert "eta" in result
        assert "gamma" in result

    @pytest.mark.asyncio
    async def test_bankrisk_ensemble(self, output_env):
        """An ensemble lists probabilities by horizon."""
        result = await server.bankrisk_ensemble(runs=3, seed=0, steps=20, settings=SMALL)

        assert result.startswith("# bankrisk ensemble")
        assert "- Runs: 3 (seeds 0..2)" in result
        assert "t=20:" in result
        assert (output_env / "ensemble_summary.json").exists()

    @pytest.mark.asyncio
    async def test_bankrisk_sweep(self, output_env):
        """A sweep renders one table row per value."""
        result = await server.bankrisk_sweep(
            parameter="gamma", values=[0.05, 0.1], runs_per_value=2, steps=10, settings=SMALL
        )

        assert result.startswith("# bankrisk sweep over gamma")
        assert "| 0.05 |" in result
        assert "| 0.1 |" in result

    @pytest.mark.asyncio
    async def test_bankrisk_sweep_alphas(self, output_env):
        """alphas sweep a0."""
        result = await server.bankrisk_sweep(alphas=[0.5], runs_per_value=2, steps=10, settings=SMALL)

        assert result.startswith("# bankrisk sweep over a0")

    @pytest.mark.asyncio
    async def test_bankrisk_sweep_needs_values(self, output_env):
        """A sweep without values is rejected."""
        result = await server.bankrisk_sweep(parameter="gamma")

        assert result.startswith("# Configuration error")

    @pytest.mark.asyncio
    async def test_bankrisk_validate_config(self):
        """Valid configs echo their derived rates."""
        result = await server.bankrisk_validate_config(settings={"seed": 9})

        assert result.startswith("# Configuration OK")
        assert "- seed: 9" in result
        assert "Per-step rates" in result

    @pytest.mark.asyncio
    async def test_bankrisk_validate_config_file(self, temp_dir):
        """Config files are read and checked."""
        path = temp_dir / "bad.yaml"
        path.write_text("n_banks: -1\n")

        result = await server.bankrisk_validate_config(config_path=str(path))

        assert result.startswith("# Configuration error")
        assert "n_banks" in result

    @pytest.mark.asyncio
    async def test_bankrisk_response_curve(self):
        """The curve table has one row per point and names the waiting peak."""
        result = await server.bankrisk_response_curve(points=5)

        assert result.startswith("# Response curve")
        assert "Waiting peaks at R = 0" in result
        assert result.count("\n| ") == 6

    @pytest.mark.asyncio
    async def test_bankrisk_response_curve_invalid(self):
        """theta1 >= theta2 is rejected."""
        result = await server.bankrisk_response_curve(theta1=1.0, theta2=0.0)

        assert result.startswith("# Configuration error")
