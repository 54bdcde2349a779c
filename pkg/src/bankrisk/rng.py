"""Seeded random number generation for reproducible runs.

Every run owns one generator. The algorithm name is recorded in run
metadata so outputs can be traced back to the bit stream that produced them.
"""

import numpy as np

RNG_ALGORITHM = "numpy.PCG64"


def make_rng(seed: int) -> np.random.Generator:
    """Create the generator for a run.

    Args:
        seed: Non-negative integer seed.

    Returns:
        A PCG64-backed numpy Generator.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def ensemble_seeds(base_seed: int, runs: int) -> list[int]:
    """Seeds of an ensemble: base_seed, base_seed + 1, ..., base_seed + runs - 1."""
    if runs < 1:
        raise ValueError(f"an ensemble needs at least one run, got {runs}")
    return list(range(base_seed, base_seed + runs))
