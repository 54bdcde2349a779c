"""Interbank exposure network.

``W[i, j]`` is the amount bank i has lent to bank j. Row sums are credit
(what a bank is owed), column sums are debt (what it owes).
"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from pathlib import Path

import numpy as np
import pandas as pd

from bankrisk.errors import ConfigError

logger = logging.getLogger(__name__)


class ExposureMatrix:
    """Directed, non-negative lending matrix with an empty diagonal.

    The weights array is read-only; write-offs produce a new matrix.
    """

    def __init__(self, weights: np.ndarray):
        w = np.array(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"exposure matrix must be square, got shape {w.shape}")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ValueError("exposure matrix entries must be finite and non-negative")
        if np.any(np.diag(w) != 0):
            raise ValueError("exposure matrix must have a zero diagonal (no self-lending)")
        w.setflags(write=False)
        self._weights = w

    @classmethod
    def zeros(cls, n_banks: int) -> ExposureMatrix:
        return cls(np.zeros((n_banks, n_banks)))

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def n_banks(self) -> int:
        return self._weights.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self._weights.sum())

    def credits(self) -> np.ndarray:
        """K_i for every bank (row sums)."""
        return self._weights.sum(axis=1)

    def debts(self) -> np.ndarray:
        """L_i for every bank (column sums)."""
        return self._weights.sum(axis=0)

    def out_degrees(self) -> np.ndarray:
        return np.count_nonzero(self._weights, axis=1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExposureMatrix):
            return NotImplemented
        return np.array_equal(self._weights, other._weights)

    def __repr__(self) -> str:
        return f"ExposureMatrix(n_banks={self.n_banks}, mass={self.total_mass:.2f})"


def credit(W: ExposureMatrix, i: int) -> float:
    """K_i: everything bank i has lent out."""
    return float(W.weights[i, :].sum())


def debt(W: ExposureMatrix, i: int) -> float:
    """L_i: everything bank i has borrowed."""
    return float(W.weights[:, i].sum())


def generate_network(
    n_banks: int,
    avg_links: float,
    weight_low: float,
    weight_high: float,
    rng: np.random.Generator,
) -> ExposureMatrix:
    """Directed Erdos-Renyi lending network with uniform loan sizes.

    Each ordered pair (i, j), i != j, carries a loan with probability
    avg_links / (n_banks - 1); loan sizes are uniform on
    [weight_low, weight_high]. The link mask is drawn first, then the sizes,
    both as one row-major block.

    Raises:
        ConfigError: If the arguments admit no such network.
    """
    problems = []
    if n_banks < 1:
        problems.append(f"n_banks must be at least 1, got {n_banks}")
    if avg_links < 0 or avg_links > max(n_banks - 1, 0):
        problems.append(f"avg_links must lie in [0, n_banks-1], got {avg_links} for {n_banks} banks")
    if weight_low > weight_high:
        problems.append(f"weight_low ({weight_low}) must not exceed weight_high ({weight_high})")
    if problems:
        raise ConfigError(problems)

    if n_banks == 1 or avg_links == 0:
        return ExposureMatrix.zeros(n_banks)

    p = avg_links / (n_banks - 1)
    links = rng.random((n_banks, n_banks)) < p
    np.fill_diagonal(links, False)
    sizes = rng.uniform(weight_low, weight_high, size=(n_banks, n_banks))
    W = ExposureMatrix(np.where(links, sizes, 0.0))
    logger.debug(f"Generated network: {int(links.sum())} loans, mass {W.total_mass:.1f}")
    return W


def write_off_defaults(W: ExposureMatrix, defaulted: Iterable[int]) -> ExposureMatrix:
    """Extinguish every loan to or from a defaulted bank.

    Lenders to a defaulted bank lose their claims (its column is zeroed) and
    the defaulted bank's own claims vanish with it (its row is zeroed).
    """
    idx = np.fromiter(defaulted, dtype=np.int64)
    if idx.size == 0:
        return W
    if np.any((idx < 0) | (idx >= W.n_banks)):
        raise ValueError(f"defaulted indices out of range for {W.n_banks} banks: {idx.tolist()}")
    w = W.weights.copy()
    w[idx, :] = 0.0
    w[:, idx] = 0.0
    return ExposureMatrix(w)


# =============================================================================
# CSV fixtures
# =============================================================================


def save_network_csv(W: ExposureMatrix, path: str | Path) -> Path:
    """Write W as N header-less rows of N comma-separated values."""
    path = Path(path)
    pd.DataFrame(W.weights).to_csv(path, header=False, index=False)
    return path


def load_network_csv(path: str | Path) -> ExposureMatrix:
    """Read a matrix written by ``save_network_csv``.

    Raises:
        ConfigError: If the file is missing or does not hold a valid matrix.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"network file not found: {path}")
    try:
        weights = pd.read_csv(path, header=None, float_precision="round_trip").to_numpy(dtype=float)
        return ExposureMatrix(weights)
    except ValueError as e:
        raise ConfigError(f"invalid network file {path}: {e}") from e
