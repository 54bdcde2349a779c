"""Pytest configuration and shared fixtures."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from bankrisk.config import SimConfig, build_config


@pytest.fixture
def temp_dir():
    """Create a temporary directory that is cleaned up after the test."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def rng():
    """A seeded generator for tests that need random inputs."""
    return np.random.default_rng(12345)


@pytest.fixture
def small_config() -> SimConfig:
    """Default parameters on a small system and a short horizon."""
    return build_config(n_banks=12, horizon_steps=60, seed=3, avg_links=4, n_sim=4)


@pytest.fixture
def quiet_config() -> SimConfig:
    """A config whose banks never default within a short horizon.

    Tiny order sizes keep price moves small, and balance sheets are far from
    insolvency.
    """
    return build_config(
        n_banks=8,
        horizon_steps=40,
        seed=11,
        avg_links=3,
        eta=1e-6,
        gamma=1e-3,
        n_sim=3,
    )
