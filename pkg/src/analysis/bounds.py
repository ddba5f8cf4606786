"""
Closed-Form Bound Functions.

This module evaluates the right-hand sides of the gradient estimates for
the porous medium and fast diffusion equations under CD(n, -K):

    N       effective dimension, 2/N = 2/n + (m - 1)
    w       (4t/N) sqrt(NR) sqrt(y + NR/4)
    C       NR/2 + sqrt(NR) sqrt(y + NR/4) coth(w/2)
    dC/dy   t R (2 coth(w/2)/w - csch^2(w/2))
    Q       C + y

C solves the Riccati equation dC/dt + (2/N) C^2 - 2R (C + y) = 0 with
C(0+) = infinity; riccati_residual integrates that equation numerically
as an independent check of the closed form.

All evaluators accept scalar or array y and switch to series expansions
where the closed forms lose precision.

Example:
    >>> from src.analysis.bounds import bigQ
    >>> round(float(bigQ(1.0, 3.0, N=2.0, R=2.0)), 4)
    9.0027
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from src.geometry.manifold import ManifoldModel
from src.utils.config import COTH_CLAMP, COTH_SERIES_THRESHOLD, DCDY_SERIES_THRESHOLD, RADICAND_SLACK
from src.utils.numerics import stable_coth

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class BoundsRangeError(ValueError):
    """Raised when a bound function is evaluated outside its domain."""
    pass


def n_effective(n: int, m: float) -> float:
    """
    Effective dimension N = 2/(2/n + m - 1).

    Raises:
        BoundsRangeError: If m <= 1 - 2/n.

    Example:
        >>> n_effective(2, 2.0)
        1.0
    """
    denominator = 2.0 / n + m - 1.0
    if denominator <= 1e-14:
        raise BoundsRangeError(f"Effective dimension undefined for n={n}, m={m} (need m > 1 - 2/n)")
    return 2.0 / denominator


def _check_t(t: ArrayLike) -> None:
    if np.any(np.asarray(t) <= 0):
        raise BoundsRangeError("Bound functions need t > 0")


def _radicand(y: ArrayLike, N: float, R: float) -> np.ndarray:
    """y + NR/4, clipped at 0 within a small slack and rejected below it."""
    if R < 0 or N <= 0:
        raise BoundsRangeError(f"Need N > 0 and R >= 0, got N={N}, R={R}")
    shift = N * R / 4.0
    rad = np.asarray(y, dtype=float) + shift
    if np.any(rad < -RADICAND_SLACK * (1.0 + shift)):
        raise BoundsRangeError(f"y must be >= -NR/4 = {-shift:.6g}")
    return np.maximum(rad, 0.0)


def w_fn(t: ArrayLike, y: ArrayLike, N: float, R: float) -> np.ndarray:
    """
    w(t, y) = (4t/N) sqrt(NR) sqrt(y + NR/4).

    Raises:
        BoundsRangeError: If y < -NR/4 or t <= 0.

    Example:
        >>> float(w_fn(1.0, 3.0, N=2.0, R=2.0))
        8.0
    """
    _check_t(t)
    rad = _radicand(y, N, R)
    return 4.0 * np.asarray(t, dtype=float) / N * np.sqrt(N * R) * np.sqrt(rad)


def capC(t: ArrayLike, y: ArrayLike, N: float, R: float) -> np.ndarray:
    """
    C(t, y) = NR/2 + sqrt(NR) sqrt(y + NR/4) coth(w/2).

    For w < 1e-4 the series NR/2 + N/(2t) + s w/6 is used, which is also
    the exact limit at y = -NR/4 and at R = 0. coth is clamped to 1 for
    w > 60.
    """
    _check_t(t)
    t = np.asarray(t, dtype=float)
    s = np.sqrt(N * R) * np.sqrt(_radicand(y, N, R))
    w = 4.0 * t * s / N
    small = w < COTH_SERIES_THRESHOLD
    coth = np.where(w > COTH_CLAMP, 1.0, stable_coth(np.where(small, 1.0, w / 2.0)))
    closed = N * R / 2.0 + s * coth
    series = N * R / 2.0 + N / (2.0 * t) + s * w / 6.0
    return np.where(small, series, closed)


def dC_dy(t: ArrayLike, y: ArrayLike, N: float, R: float) -> np.ndarray:
    """
    b(t, y) = dC/dy = 2tR (e^(2w) - 1 - 2w e^w) / ((e^w - 1)^2 w) >= 0.

    Evaluated as tR (2 coth(w/2)/w - csch^2(w/2)) through q = e^(-w);
    below w = 1e-2 the series tR (2/3 - w^2/45 + w^4/1260) replaces it.
    The limit at y = -NR/4 is 2tR/3.
    """
    _check_t(t)
    t = np.asarray(t, dtype=float)
    w = np.asarray(w_fn(t, y, N, R), dtype=float)
    small = w < DCDY_SERIES_THRESHOLD
    w_safe = np.where(small, 1.0, w)
    q = np.exp(-w_safe)
    one_minus_q = -np.expm1(-w_safe)
    coth_half = (1.0 + q) / one_minus_q
    csch2_half = 4.0 * q / one_minus_q**2
    closed = t * R * (2.0 * coth_half / w_safe - csch2_half)
    series = t * R * (2.0 / 3.0 - w**2 / 45.0 + w**4 / 1260.0)
    return np.where(small, series, closed)


def bigQ(t: ArrayLike, y: ArrayLike, N: float, R: float) -> np.ndarray:
    """Q(t, y) = C(t, y) + y."""
    return capC(t, y, N, R) + np.asarray(y, dtype=float)


def riccati_residual(t_grid: Sequence[float], y: float, N: float, R: float) -> float:
    """
    Max deviation between a numerical solution of the Riccati equation and capC.

    Integrates dC/dt = -(2/N) C^2 + 2R (C + y) from C(t_grid[0]) given by
    the closed form, with DOP853 at rtol = atol = 1e-12.

    Args:
        t_grid: Increasing positive times.
        y: Fixed y >= -NR/4.
        N: Effective dimension.
        R: Curvature scale sup K U.

    Returns:
        max |C_numeric(t) - capC(t, y)| over t_grid.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    _check_t(t_grid)
    if t_grid.size < 2 or np.any(np.diff(t_grid) <= 0):
        raise BoundsRangeError("t_grid must hold at least two increasing times")
    exact = capC(t_grid, y, N, R)

    def rhs(_t, c):
        return -(2.0 / N) * c**2 + 2.0 * R * (c + y)

    sol = solve_ivp(
        rhs, (t_grid[0], t_grid[-1]), [float(exact[0])],
        method="DOP853", t_eval=t_grid, rtol=1e-12, atol=1e-12,
    )
    if not sol.success:
        logger.warning("Riccati integration failed: %s", sol.message)
        return float("inf")
    deviation = float(np.max(np.abs(sol.y[0] - exact)))
    logger.debug("Riccati residual for N=%g R=%g y=%g: %.3e", N, R, y, deviation)
    return deviation


def thm_a1_rhs(t: ArrayLike, u: ArrayLike, m: float, n: int, K: float) -> np.ndarray:
    """
    Fast diffusion bound N/(2t) + 2 K m u^(m-1)/((1-m)(2m-1)).

    Raises:
        BoundsRangeError: Unless max(1/2, 1 - 2/n) < m < 1, K >= 0 and t > 0.

    Example:
        >>> round(float(thm_a1_rhs(1.0, 1.0, m=0.75, n=3, K=2.0)), 10)
        26.4
    """
    if not (0.5 < m < 1.0 and m > 1.0 - 2.0 / n):
        raise BoundsRangeError(f"Fast diffusion bound needs max(1/2, 1-2/n) < m < 1, got m={m}, n={n}")
    if K < 0:
        raise BoundsRangeError(f"K must be >= 0, got {K}")
    _check_t(t)
    u = np.asarray(u, dtype=float)
    N = n_effective(n, m)
    return N / (2.0 * np.asarray(t, dtype=float)) + 2.0 * K * m * u ** (m - 1.0) / ((1.0 - m) * (2.0 * m - 1.0))


def thm_a2_rhs(t: ArrayLike, c: float, N: float) -> np.ndarray:
    """
    Flat-space bound (2t/N + 1/c)^(-1) for Z given Z <= c at time 0.

    c = inf gives N/(2t); c = 0 gives 0.

    Example:
        >>> float(thm_a2_rhs(1.0, 1.0, N=2.0))
        0.5
    """
    if c < 0:
        raise BoundsRangeError(f"c must be >= 0, got {c}")
    t = np.asarray(t, dtype=float)
    if c == 0:
        return np.zeros_like(t)
    if math.isinf(c):
        return N / (2.0 * t)
    return 1.0 / (2.0 * t / N + 1.0 / c)


def thm_a2_display_rhs(t: ArrayLike, c: float, N: float) -> np.ndarray:
    """Display variant c/((N/2t) c + 1) of the flat-space bound."""
    if c < 0:
        raise BoundsRangeError(f"c must be >= 0, got {c}")
    t = np.asarray(t, dtype=float)
    if math.isinf(c):
        return 2.0 * t / N
    return c / ((N / (2.0 * t)) * c + 1.0)


@dataclass(frozen=True)
class BoundParams:
    """
    Scalars entering the bounds.

    Attributes:
        m: Exponent.
        n: Dimension.
        K: CD constant (>= 0).
        R: sup K U over the space-time domain (>= 0).
        c: Initial bound on Z, in [0, inf].
        N: Effective dimension, derived from n and m.
    """

    m: float
    n: int
    K: float = 0.0
    R: float = 0.0
    c: float = math.inf
    N: float = field(init=False)

    def __post_init__(self) -> None:
        if self.K < 0:
            raise BoundsRangeError(f"K must be >= 0, got {self.K}")
        if self.R < 0:
            raise BoundsRangeError(f"R must be >= 0, got {self.R}")
        if self.c < 0:
            raise BoundsRangeError(f"c must be >= 0, got {self.c}")
        object.__setattr__(self, "N", n_effective(self.n, self.m))

    @classmethod
    def from_model(
        cls, m: float, model: ManifoldModel, R: float = 0.0, c: float = math.inf
    ) -> "BoundParams":
        return cls(m=m, n=model.n, K=model.cd_constant(), R=R, c=c)

    @property
    def regime_threshold(self) -> float:
        """-NR/4, the lower end of the y domain."""
        return -self.N * self.R / 4.0

    def as_dict(self) -> dict:
        return {"m": self.m, "n": self.n, "N": self.N, "K": self.K, "R": self.R, "c": self.c}


def bound_table(
    times: Sequence[float],
    ys: Sequence[float],
    N: float,
    R: float,
) -> pd.DataFrame:
    """
    Sweep of the bound functions over a (t, y) product grid.

    Returns:
        DataFrame with columns t, y, w, C, dC_dy, Q, one row per pair,
        t varying slowest.
    """
    t_col, y_col = (a.ravel() for a in np.meshgrid(
        np.asarray(times, dtype=float), np.asarray(ys, dtype=float), indexing="ij"
    ))
    return pd.DataFrame({
        "t": t_col,
        "y": y_col,
        "w": w_fn(t_col, y_col, N, R),
        "C": capC(t_col, y_col, N, R),
        "dC_dy": dC_dy(t_col, y_col, N, R),
        "Q": bigQ(t_col, y_col, N, R),
    })
