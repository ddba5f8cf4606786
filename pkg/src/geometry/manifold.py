"""
Rotationally Symmetric Model Manifolds.

This module provides the ManifoldModel class and the radial finite
difference operators built on it: the Laplace-Beltrami operator, the
iterated carre du champ Gamma_2 and the curvature-dimension defect.

A model manifold carries the metric dr^2 + A(r)^2 dtheta^2 with warping
function A(r) = r (Euclidean) or A(r) = sinh(sqrt(kappa) r)/sqrt(kappa)
(hyperbolic, sectional curvature -kappa). Radial fields are numpy arrays
sampled on uniform node arrays.

Example:
    >>> import numpy as np
    >>> from src.geometry.manifold import ManifoldModel, radial_laplacian
    >>> model = ManifoldModel.euclidean(n=2)
    >>> r = np.linspace(0.0, 1.0, 11)
    >>> radial_laplacian(model, r, r**2)  # 4 everywhere
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from src.utils.config import MIN_GRID_POINTS
from src.utils.numerics import stable_coth

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class GeometryError(Exception):
    """Base exception for geometry configuration problems."""
    pass


class GridTooCoarseError(GeometryError):
    """Raised when a radial field has fewer points than the stencils need."""

    def __init__(self, points: int):
        self.points = points
        msg = f"Radial grid needs at least {MIN_GRID_POINTS} points, got {points}"
        super().__init__(msg)


class ManifoldKind(Enum):
    """Supported model geometries."""

    EUCLIDEAN = "Euclidean"
    HYPERBOLIC = "Hyperbolic"


@dataclass(frozen=True)
class ManifoldModel:
    """
    A rotationally symmetric model manifold.

    Attributes:
        kind: Euclidean or Hyperbolic.
        n: Dimension (>= 1).
        kappa: Sectional-curvature magnitude; hyperbolic space has
            curvature -kappa. Forced to 0 for Euclidean models.

    Example:
        >>> model = ManifoldModel.hyperbolic(n=3, kappa=1.0)
        >>> model.cd_constant()
        2.0
    """

    kind: ManifoldKind
    n: int
    kappa: float = 0.0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise GeometryError(f"Dimension must be an integer >= 1, got {self.n}")
        if self.kappa < 0:
            raise GeometryError(f"kappa must be >= 0, got {self.kappa}")
        if self.kind == ManifoldKind.EUCLIDEAN and self.kappa != 0.0:
            logger.warning("Euclidean model ignores kappa=%s; using 0", self.kappa)
            object.__setattr__(self, "kappa", 0.0)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def euclidean(cls, n: int) -> "ManifoldModel":
        """Flat space R^n."""
        return cls(ManifoldKind.EUCLIDEAN, n, 0.0)

    @classmethod
    def hyperbolic(cls, n: int, kappa: float = 1.0) -> "ManifoldModel":
        """Hyperbolic space of sectional curvature -kappa."""
        return cls(ManifoldKind.HYPERBOLIC, n, kappa)

    @property
    def is_flat(self) -> bool:
        return self.kind == ManifoldKind.EUCLIDEAN or self.kappa == 0.0

    def cd_constant(self) -> float:
        """The constant K in CD(n, -K): (n-1)*kappa, zero when flat."""
        return (self.n - 1) * self.kappa

    def warp(self, r: ArrayLike) -> np.ndarray:
        """Warping function A(r)."""
        r = np.asarray(r, dtype=float)
        if self.is_flat:
            return r.copy()
        sk = np.sqrt(self.kappa)
        return np.sinh(sk * r) / sk

    def log_warp_derivative(self, r: ArrayLike) -> np.ndarray:
        """
        A'(r)/A(r), with the value 0 at r = 0.

        The axis value is a placeholder: every operator replaces the
        term (A'/A) g' by its limit g''(0) on the axis.
        """
        r = np.asarray(r, dtype=float)
        on_axis = r == 0.0
        safe_r = np.where(on_axis, 1.0, r)
        if self.is_flat:
            ratio = 1.0 / safe_r
        else:
            sk = np.sqrt(self.kappa)
            ratio = sk * stable_coth(sk * safe_r)
        return np.where(on_axis, 0.0, ratio)

    def warp_curvature(self, r: ArrayLike) -> np.ndarray:
        """A''(r)/A(r): 0 for Euclidean, kappa for hyperbolic."""
        r = np.asarray(r, dtype=float)
        return np.full(r.shape, 0.0 if self.is_flat else self.kappa)

    def ricci_radial(self, r: ArrayLike) -> np.ndarray:
        """Ric(d_r, d_r) = -(n-1) A''/A."""
        return -(self.n - 1) * self.warp_curvature(r)

    def describe(self) -> dict:
        return {"kind": self.kind.value, "n": self.n, "kappa": self.kappa, "K": self.cd_constant()}


def drift_coefficient(model: ManifoldModel, r: ArrayLike) -> np.ndarray:
    """
    First-order coefficient (n-1) A'(r)/A(r) of the radial Laplacian.

    Args:
        model: The model manifold.
        r: Radius or array of radii (>= 0).

    Returns:
        The drift coefficient; 0 at r = 0, where radial_laplacian uses
        the limit n g''(0) instead.

    Raises:
        GeometryError: If any radius is negative.

    Example:
        >>> drift_coefficient(ManifoldModel.euclidean(3), 2.0)
        array(1.)
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise GeometryError("Radius must be non-negative")
    return (model.n - 1) * model.log_warp_derivative(r)


def _check_nodes(r: np.ndarray, g: np.ndarray) -> float:
    """Validate a uniform node array and return its spacing."""
    if r.shape != g.shape:
        raise GeometryError(f"Node array shape {r.shape} does not match field shape {g.shape}")
    if r.size < MIN_GRID_POINTS:
        raise GridTooCoarseError(r.size)
    h = r[1] - r[0]
    if h <= 0 or not np.allclose(np.diff(r), h, rtol=1e-8, atol=0.0):
        raise GeometryError("Radial nodes must be uniformly spaced and increasing")
    if r[0] < 0:
        raise GeometryError("Radial nodes must be non-negative")
    return float(h)


def radial_derivatives(r: ArrayLike, g: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """
    Second-order finite-difference g' and g'' of a radial field.

    Interior nodes use centred differences. A first node on the axis
    (r = 0) or half a cell off it (r = h/2) uses the even reflection
    ghost value; otherwise the ends use one-sided second-order stencils.

    Args:
        r: Uniform, increasing node radii.
        g: Field values at the nodes.

    Returns:
        Tuple (g_r, g_rr).

    Raises:
        GridTooCoarseError: If fewer than 3 nodes are given.
    """
    r = np.asarray(r, dtype=float)
    g = np.asarray(g, dtype=float)
    h = _check_nodes(r, g)

    g_r = np.empty_like(g)
    g_rr = np.empty_like(g)
    g_r[1:-1] = (g[2:] - g[:-2]) / (2.0 * h)
    g_rr[1:-1] = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / h**2

    ghost: Optional[float] = None
    if np.isclose(r[0], 0.0, atol=1e-12 * h):
        ghost = g[1]
    elif np.isclose(r[0], 0.5 * h, rtol=1e-8):
        ghost = g[0]

    if ghost is not None:
        g_r[0] = (g[1] - ghost) / (2.0 * h)
        g_rr[0] = (g[1] - 2.0 * g[0] + ghost) / h**2
    else:
        g_r[0] = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h)
        g_rr[0] = _one_sided_second(g[:4]) / h**2

    g_r[-1] = (3.0 * g[-1] - 4.0 * g[-2] + g[-3]) / (2.0 * h)
    g_rr[-1] = _one_sided_second(g[::-1][:4]) / h**2
    return g_r, g_rr


def _one_sided_second(g: np.ndarray) -> float:
    # 4-point stencil is second order; with 3 points fall back to first order
    if g.size >= 4:
        return 2.0 * g[0] - 5.0 * g[1] + 4.0 * g[2] - g[3]
    return g[0] - 2.0 * g[1] + g[2]


def _tangential_rate(model: ManifoldModel, r: np.ndarray, g_r: np.ndarray, g_rr: np.ndarray) -> np.ndarray:
    """(A'/A) g', replaced by its axis limit g'' at r = 0."""
    return np.where(r == 0.0, g_rr, model.log_warp_derivative(r) * g_r)


def laplacian_from_derivatives(
    model: ManifoldModel, r: ArrayLike, g_r: ArrayLike, g_rr: ArrayLike
) -> np.ndarray:
    """Delta g = g'' + (n-1)(A'/A) g' from given radial derivatives."""
    r = np.asarray(r, dtype=float)
    g_r = np.asarray(g_r, dtype=float)
    g_rr = np.asarray(g_rr, dtype=float)
    return g_rr + (model.n - 1) * _tangential_rate(model, r, g_r, g_rr)


def gamma2_from_derivatives(
    model: ManifoldModel, r: ArrayLike, f_r: ArrayLike, f_rr: ArrayLike
) -> np.ndarray:
    """
    Gamma_2(f, f) = |Hess f|^2 + Ric(grad f, grad f) for radial f.

    The Hessian of a radial function has eigenvalue f'' along d_r and
    (A'/A) f' on the (n-1) tangential directions.
    """
    r = np.asarray(r, dtype=float)
    f_r = np.asarray(f_r, dtype=float)
    f_rr = np.asarray(f_rr, dtype=float)
    tangential = _tangential_rate(model, r, f_r, f_rr)
    hessian_sq = f_rr**2 + (model.n - 1) * tangential**2
    return hessian_sq + model.ricci_radial(r) * f_r**2


def radial_laplacian(model: ManifoldModel, r: ArrayLike, g: ArrayLike) -> np.ndarray:
    """
    Discrete Laplace-Beltrami operator of a radial field.

    Args:
        model: The model manifold.
        r: Uniform node radii.
        g: Field values.

    Returns:
        Delta_h g at every node; n g''(0) on an axis node.

    Raises:
        GridTooCoarseError: If fewer than 3 nodes are given.

    Example:
        >>> r = np.linspace(0.0, 2.0, 21)
        >>> radial_laplacian(ManifoldModel.euclidean(2), r, r**2)[5]
        4.0
    """
    r = np.asarray(r, dtype=float)
    g_r, g_rr = radial_derivatives(r, g)
    return laplacian_from_derivatives(model, r, g_r, g_rr)


def gamma2_radial(model: ManifoldModel, r: ArrayLike, f: ArrayLike) -> np.ndarray:
    """
    Gamma_2(f, f) of a radial field via finite differences.

    Returns:
        f''^2 + (n-1)(A'/A)^2 f'^2 - (n-1)(A''/A) f'^2 at every node.
    """
    r = np.asarray(r, dtype=float)
    f_r, f_rr = radial_derivatives(r, f)
    return gamma2_from_derivatives(model, r, f_r, f_rr)


def cd_defect_from_derivatives(
    model: ManifoldModel, r: ArrayLike, f_r: ArrayLike, f_rr: ArrayLike
) -> np.ndarray:
    """Gamma_2(f,f) - (Lf)^2/n + K |grad f|^2 from given derivatives."""
    gamma2 = gamma2_from_derivatives(model, r, f_r, f_rr)
    lap = laplacian_from_derivatives(model, r, f_r, f_rr)
    return gamma2 - lap**2 / model.n + model.cd_constant() * np.asarray(f_r, dtype=float) ** 2


def cd_defect(model: ManifoldModel, r: ArrayLike, f: ArrayLike) -> np.ndarray:
    """
    Pointwise defect of the curvature-dimension inequality CD(n, -K).

    The result is non-negative up to discretization error for every
    smooth radial f on the supported models.

    Example:
        >>> r = np.linspace(0.0, 2.0, 21)
        >>> cd_defect(ManifoldModel.euclidean(3), r, r**2 / 2)  # zeros
    """
    r = np.asarray(r, dtype=float)
    f_r, f_rr = radial_derivatives(r, f)
    return cd_defect_from_derivatives(model, r, f_r, f_rr)
