"""
Small numerical helpers shared across modules.
"""

from typing import Sequence, Union

import numpy as np

from src.utils.config import COTH_SERIES_THRESHOLD

ArrayLike = Union[float, np.ndarray]


def stable_coth(x: ArrayLike, series_below: float = COTH_SERIES_THRESHOLD) -> np.ndarray:
    """
    Evaluate coth(x) for x > 0 without cancellation near zero.

    Uses 1/tanh(x) for x >= series_below and the Laurent series
    1/x + x/3 below it.

    Args:
        x: Positive argument (scalar or array).
        series_below: Switch point for the series branch.

    Returns:
        coth(x) with the same shape as x.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < series_below
    # Placeholder 1.0 keeps tanh away from 0 on the series branch
    safe = np.where(small, 1.0, x)
    out = np.where(small, 0.0, 1.0 / np.tanh(safe))
    with np.errstate(divide="ignore"):
        series = np.where(small, 1.0 / np.where(small, x, 1.0) + x / 3.0, 0.0)
    return np.where(small, series, out)


def observed_orders(errors: Sequence[float], ratio: float = 2.0) -> np.ndarray:
    """
    Observed convergence orders between successive refinement levels.

    Args:
        errors: Error per level, coarsest first.
        ratio: Refinement ratio between levels.

    Returns:
        Array of length len(errors) - 1. Entries are NaN where either
        error is zero or not finite.

    Example:
        >>> observed_orders([4e-2, 1e-2, 2.5e-3])
        array([2., 2.])
    """
    e = np.asarray(errors, dtype=float)
    if e.size < 2:
        return np.array([])
    coarse, fine = e[:-1], e[1:]
    valid = (coarse > 0) & (fine > 0) & np.isfinite(coarse) & np.isfinite(fine)
    orders = np.full(coarse.shape, np.nan)
    orders[valid] = np.log(coarse[valid] / fine[valid]) / np.log(ratio)
    return orders
