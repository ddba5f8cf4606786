"""
Closed-Form Reference Solutions on Euclidean Space.

Self-similar solutions u = t^(-alpha) phi(r t^(-alpha/n)) of the porous
medium equation (Barenblatt, m > 1) and the fast diffusion equation
(1 - 2/n < m < 1), plus the Gaussian heat kernel (m = 1). All three
saturate the Aronson-Benilan / Li-Yau estimate in the interior, which
makes them the equality oracles for the verifier.

Substituting the ansatz into u_t = Delta u^m gives
alpha = n/(n(m-1) + 2) and the profile phi(xi) = (b0 - k xi^2)^(1/(m-1))
with k = alpha (m-1)/(2 m n). For m < 1 the constant k is negative, so
the same formula gives a positive profile with algebraic tails.

Example:
    >>> from src.solver.exact_solutions import SelfSimilarParams, barenblatt
    >>> params = SelfSimilarParams(n=1, m=2.0)
    >>> params.alpha
    0.3333333333333333
    >>> float(barenblatt(params, t=8.0, r=0.0))
    0.5
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma

from src.geometry.manifold import ManifoldModel
from src.solver.pme_solver import RadialGrid, SolutionTrajectory
from src.utils.config import DEFAULT_B0, EXACT_FLOOR

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
Derivatives = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


class ExactSolutionError(ValueError):
    """Raised when parameters fall outside a closed form's range of validity."""
    pass


class ExactKind(Enum):
    """Available closed-form solutions."""

    BARENBLATT = "Barenblatt"
    FAST_DIFFUSION = "FastDiffusionSS"
    GAUSSIAN = "Gaussian"


@dataclass(frozen=True)
class SelfSimilarParams:
    """
    Parameters of a self-similar solution.

    Attributes:
        n: Dimension.
        m: Exponent, with n(m-1) + 2 > 0.
        b0: Profile constant (> 0).
    """

    n: int
    m: float
    b0: float = DEFAULT_B0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ExactSolutionError(f"n must be an integer >= 1, got {self.n}")
        if not self.b0 > 0:
            raise ExactSolutionError(f"b0 must be > 0, got {self.b0}")
        if not self.n * (self.m - 1.0) + 2.0 > 0:
            raise ExactSolutionError(
                f"Self-similar solutions need m > 1 - 2/n; got m={self.m}, n={self.n}"
            )

    @property
    def alpha(self) -> float:
        return self.n / (self.n * (self.m - 1.0) + 2.0)

    @property
    def beta(self) -> float:
        """Spatial similarity exponent alpha/n."""
        return self.alpha / self.n

    @property
    def k(self) -> float:
        if self.m == 1.0:
            raise ExactSolutionError("Profile constant k is undefined at m = 1")
        return self.alpha * (self.m - 1.0) / (2.0 * self.m * self.n)

    @property
    def N(self) -> float:
        """Effective dimension 2/(2/n + m - 1) = 2 alpha."""
        return 2.0 * self.alpha


def _check_time(t: float) -> None:
    if not t > 0:
        raise ExactSolutionError(f"t must be > 0, got {t}")


def _profile_base(params: SelfSimilarParams, t: float, r: ArrayLike) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return params.b0 - params.k * r**2 * t ** (-2.0 * params.beta)


def barenblatt(params: SelfSimilarParams, t: float, r: ArrayLike) -> np.ndarray:
    """
    Barenblatt solution of the porous medium equation.

    Args:
        params: Self-similar parameters with m > 1.
        t: Time (> 0).
        r: Radius or array of radii.

    Returns:
        u(t, r) = t^(-alpha) max(b0 - k r^2 t^(-2 alpha/n), 0)^(1/(m-1)).

    Raises:
        ExactSolutionError: If m <= 1 or t <= 0.
    """
    if not params.m > 1:
        raise ExactSolutionError(f"Barenblatt solution needs m > 1, got {params.m}")
    _check_time(t)
    base = np.maximum(_profile_base(params, t, r), 0.0)
    return t ** (-params.alpha) * base ** (1.0 / (params.m - 1.0))


def fast_diffusion_selfsimilar(params: SelfSimilarParams, t: float, r: ArrayLike) -> np.ndarray:
    """
    Positive self-similar solution of the fast diffusion equation.

    The profile is t^(-alpha) (b0 + |k| r^2 t^(-2 alpha/n))^(1/(m-1)),
    strictly positive with no free boundary.

    Raises:
        ExactSolutionError: Unless 1 - 2/n < m < 1 and t > 0.
    """
    if not params.m < 1:
        raise ExactSolutionError(f"Fast diffusion solution needs m < 1, got {params.m}")
    _check_time(t)
    base = _profile_base(params, t, r)
    return t ** (-params.alpha) * base ** (1.0 / (params.m - 1.0))


def gaussian_heat_kernel(n: int, t: float, r: ArrayLike) -> np.ndarray:
    """Heat kernel (4 pi t)^(-n/2) exp(-r^2/(4t)) on R^n."""
    _check_time(t)
    r = np.asarray(r, dtype=float)
    return (4.0 * np.pi * t) ** (-n / 2.0) * np.exp(-(r**2) / (4.0 * t))


def gaussian_heat_kernel_derivatives(n: int, t: float, r: ArrayLike) -> Derivatives:
    """
    Heat kernel and its analytic derivatives.

    Returns:
        Tuple (u, u_r, u_rr, u_t).
    """
    r = np.asarray(r, dtype=float)
    u = gaussian_heat_kernel(n, t, r)
    u_r = -r / (2.0 * t) * u
    u_rr = (r**2 / (4.0 * t**2) - 1.0 / (2.0 * t)) * u
    u_t = (r**2 / (4.0 * t**2) - n / (2.0 * t)) * u
    return u, u_r, u_rr, u_t


def selfsimilar_derivatives(params: SelfSimilarParams, t: float, r: ArrayLike) -> Derivatives:
    """
    Self-similar solution (either sign of m - 1) and its analytic derivatives.

    Outside the Barenblatt support all four arrays are zero.

    Returns:
        Tuple (u, u_r, u_rr, u_t).
    """
    _check_time(t)
    r = np.asarray(r, dtype=float)
    p = 1.0 / (params.m - 1.0)
    k, a, b = params.k, params.alpha, params.beta
    decay = t ** (-2.0 * b)

    q = params.b0 - k * r**2 * decay
    inside = q > 0
    q_safe = np.where(inside, q, 1.0)
    q_r = -2.0 * k * r * decay
    q_rr = -2.0 * k * decay
    q_t = 2.0 * b * k * r**2 * decay / t

    scale = t ** (-a)
    u = scale * q_safe**p
    u_r = scale * p * q_safe ** (p - 1.0) * q_r
    u_rr = scale * p * ((p - 1.0) * q_safe ** (p - 2.0) * q_r**2 + q_safe ** (p - 1.0) * q_rr)
    u_t = -a / t * u + scale * p * q_safe ** (p - 1.0) * q_t
    zero = np.zeros_like(q)
    return tuple(np.where(inside, d, zero) for d in (u, u_r, u_rr, u_t))  # type: ignore[return-value]


def support_radius(params: SelfSimilarParams, t: float) -> float:
    """Free-boundary radius of the Barenblatt solution (inf when m < 1)."""
    _check_time(t)
    if params.m < 1:
        return float("inf")
    return float(np.sqrt(params.b0 * t ** (2.0 * params.beta) / params.k))


def unit_sphere_area(n: int) -> float:
    """Area of the unit sphere S^(n-1) in R^n."""
    return float(2.0 * np.pi ** (n / 2.0) / gamma(n / 2.0))


def gaussian_mass(n: int, t: float) -> float:
    """Total mass of the heat kernel by radial quadrature (equals 1)."""
    _check_time(t)
    radial, _ = quad(lambda s: gaussian_heat_kernel(n, t, s) * s ** (n - 1), 0.0, np.inf)
    return unit_sphere_area(n) * radial


def exact_profile(kind: ExactKind, params: SelfSimilarParams, t: float, r: ArrayLike) -> np.ndarray:
    """Evaluate the closed form named by `kind`."""
    if kind == ExactKind.BARENBLATT:
        return barenblatt(params, t, r)
    if kind == ExactKind.FAST_DIFFUSION:
        return fast_diffusion_selfsimilar(params, t, r)
    if params.m != 1.0:
        raise ExactSolutionError(f"Gaussian heat kernel needs m = 1, got {params.m}")
    return gaussian_heat_kernel(params.n, t, r)


def exact_derivatives(kind: ExactKind, params: SelfSimilarParams, t: float, r: ArrayLike) -> Derivatives:
    """Analytic (u, u_r, u_rr, u_t) for the closed form named by `kind`."""
    if kind == ExactKind.GAUSSIAN:
        if params.m != 1.0:
            raise ExactSolutionError(f"Gaussian heat kernel needs m = 1, got {params.m}")
        return gaussian_heat_kernel_derivatives(params.n, t, r)
    if (kind == ExactKind.BARENBLATT) != (params.m > 1):
        raise ExactSolutionError(f"{kind.value} solution is not defined for m={params.m}")
    return selfsimilar_derivatives(params, t, r)


def sample_trajectory(
    kind: ExactKind,
    params: SelfSimilarParams,
    grid: RadialGrid,
    times: Sequence[float],
    floor: float = EXACT_FLOOR,
) -> SolutionTrajectory:
    """
    Sample a closed-form solution on a grid as a SolutionTrajectory.

    Values below `floor` (outside the Barenblatt support) are raised to
    it so the trajectory stays strictly positive; consumers mask them out
    with a support cutoff.

    Args:
        kind: Which closed form to sample.
        params: Dimension, exponent and profile constant.
        grid: Radial grid.
        times: Strictly increasing positive times.
        floor: Positive floor value.

    Returns:
        SolutionTrajectory with source "exact" on Euclidean space.
    """
    if not floor > 0:
        raise ExactSolutionError(f"floor must be > 0, got {floor}")
    times = np.asarray(times, dtype=float)
    values = np.vstack([exact_profile(kind, params, float(t), grid.nodes) for t in times])
    floored = int(np.sum(values < floor))
    if floored:
        logger.debug("Raised %d sampled values to the floor %.1e", floored, floor)
    values = np.maximum(values, floor)
    model = ManifoldModel.euclidean(params.n)
    return SolutionTrajectory(times, values, params.m, model, grid, source="exact")
