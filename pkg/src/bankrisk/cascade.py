"""Default contagion through the exposure network.

Starting from an initial default set, every lender writes off its claims on
newly defaulted borrowers. A surviving bank whose cumulative loss Q_i
strictly exceeds its equity E_i defaults in turn. Claims on a defaulted
borrower are counted once and then zeroed, so the recursion reaches a fixed
point after at most N + 1 passes.
"""

import logging
from collections.abc import Iterable

import numpy as np

from bankrisk.network import ExposureMatrix
from bankrisk.types import CascadeResult

logger = logging.getLogger(__name__)


def run_cascade(
    W: ExposureMatrix,
    equity: np.ndarray,
    initial_defaults: Iterable[int],
    economic_value: np.ndarray | None = None,
) -> CascadeResult:
    """Propagate defaults to the fixed point.

    Banks are updated synchronously: each pass books the losses from the
    defaults of the previous pass, then flags every surviving bank with
    0 < Q_i and Q_i > E_i. A bank that is insolvent without any loss is a
    market default and belongs in ``initial_defaults``.

    Args:
        W: Exposures before the cascade.
        equity: Pre-cascade equity per bank.
        initial_defaults: Banks already defaulted at pass 0.
        economic_value: Optional C + J + K per bank; when given, the loss
            totals are filled in via ``total_losses``.

    Returns:
        CascadeResult with final flags, cumulative losses and the matrix with
        every claim on a defaulted bank zeroed.

    Raises:
        ValueError: If ``equity`` or ``initial_defaults`` do not fit W.
    """
    n = W.n_banks
    equity = np.asarray(equity, dtype=float)
    if equity.shape != (n,):
        raise ValueError(f"equity has shape {equity.shape}, expected ({n},)")
    initial = np.fromiter(initial_defaults, dtype=np.int64)
    if np.any((initial < 0) | (initial >= n)):
        raise ValueError(f"initial defaults out of range for {n} banks: {initial.tolist()}")

    defaulted = np.zeros(n, dtype=bool)
    defaulted[initial] = True
    fresh = defaulted.copy()
    losses = np.zeros(n)
    w = W.weights.copy()
    iterations = 0

    while True:
        iterations += 1
        if fresh.any():
            losses += w[:, fresh].sum(axis=1)
            w[:, fresh] = 0.0
        newly = ~defaulted & (losses > 0) & (losses > equity)
        if not newly.any():
            break
        defaulted |= newly
        fresh = newly

    logger.debug(
        f"Cascade: {initial.size} initial -> {int(defaulted.sum())} defaulted in {iterations} passes"
    )
    result = CascadeResult(
        defaulted=defaulted,
        cumulative_loss=losses,
        updated_exposures=ExposureMatrix(w),
        iterations=iterations,
    )
    if economic_value is not None:
        result.loss_per_bank, result.total_loss = total_losses(result, economic_value)
    return result


def total_losses(
    result: CascadeResult | np.ndarray,
    economic_value: np.ndarray,
) -> tuple[np.ndarray, float]:
    """System-wide losses from a set of defaults.

    H_i = sum over defaulted j != i of (C_j + J_j + K_j), and H = sum_i H_i,
    which equals (N - 1) times the total value of the defaulted banks.

    Args:
        result: A cascade result, or a boolean default flag per bank.
        economic_value: Value per bank; only defaulted entries are read.

    Returns:
        Tuple of (H_i per bank, H).
    """
    flags = result.defaulted if isinstance(result, CascadeResult) else np.asarray(result, dtype=bool)
    values = np.where(flags, np.asarray(economic_value, dtype=float), 0.0)
    per_bank = values.sum() - values
    return per_bank, float(per_bank.sum())
