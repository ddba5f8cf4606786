"""
Hopf-Transformed Fields and Evolution Identities.

For a positive solution u of u_t = Delta u^m this module computes

    f = m (u^(m-1) - 1)/(m-1)   (log u at m = 1)
    U = (m-1) f + m = m u^(m-1)
    X = |grad f|^2 / U,  Y = f_t / U,  Z = X - Y = -Lf

on every grid node, the elliptic operator A g = U Lg + 2m <grad f, grad g>,
and residuals of the evolution identities

    (A - d_t) Y = -(m-1) Y^2
    (A - d_t) U = (2m-1)(m-1) U X
    (A - d_t) Z = 2 Gamma_2(f, f) + (m-1) Z^2

that drive the maximum-principle estimates.

Example:
    >>> from src.analysis.hopf import compute_fields, FieldMode
    >>> fields = compute_fields(traj, k=5, mode=FieldMode.TEMPORAL_DIFFERENCE)
    >>> fields.Z[fields.interior].max()
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from src.geometry.manifold import (
    ManifoldModel,
    gamma2_from_derivatives,
    laplacian_from_derivatives,
    radial_derivatives,
)
from src.solver.pme_solver import SolutionTrajectory
from src.utils.config import BOUNDARY_CELLS

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class HopfError(Exception):
    """Base exception for Hopf field computations."""
    pass


class NonPositiveInputError(HopfError, ValueError):
    """Raised when the Hopf transform receives u <= 0."""
    pass


class NonPositiveSolutionError(HopfError):
    """Raised when a snapshot contains non-positive values."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"Snapshot {index} is not strictly positive")


class SnapshotIndexError(HopfError, IndexError):
    """Raised when a snapshot index leaves the range a computation needs."""

    def __init__(self, index: int, low: int, high: int):
        self.index = index
        self.low = low
        self.high = high
        super().__init__(f"Snapshot index {index} outside the valid range [{low}, {high}]")


class FieldMode(Enum):
    """How f_t is obtained for a snapshot."""

    TEMPORAL_DIFFERENCE = "TemporalDifference"
    PDE_IDENTITY = "PdeIdentity"


def default_mode(traj: SolutionTrajectory) -> FieldMode:
    """PdeIdentity for sampled closed forms, TemporalDifference for solver output."""
    return FieldMode.PDE_IDENTITY if traj.source == "exact" else FieldMode.TEMPORAL_DIFFERENCE


def hopf_transform(u: ArrayLike, m: float) -> np.ndarray:
    """
    Modified Hopf transform of a positive field.

    Args:
        u: Positive value or array.
        m: Exponent (> 0).

    Returns:
        m (u^(m-1) - 1)/(m-1), or log u at m = 1. Evaluated through expm1
        so values for m near 1 stay continuous with the logarithm.

    Raises:
        NonPositiveInputError: If any u <= 0 or m <= 0.

    Example:
        >>> float(hopf_transform(3.0, 2.0))
        4.0
    """
    u = np.asarray(u, dtype=float)
    if not m > 0:
        raise NonPositiveInputError(f"Exponent must be > 0, got {m}")
    if np.any(u <= 0):
        raise NonPositiveInputError("Hopf transform needs u > 0")
    log_u = np.log(u)
    if m == 1.0:
        return log_u
    return m * np.expm1((m - 1.0) * log_u) / (m - 1.0)


@dataclass
class HopfFields:
    """
    Transformed quantities of one snapshot on the grid nodes.

    Attributes:
        t: Snapshot time.
        r: Node radii.
        u: Solution values.
        m: Exponent.
        f: Hopf transform of u.
        U: m u^(m-1) = (m-1) f + m.
        grad_f: Radial derivative f'.
        f_rr: Second radial derivative f''.
        gradf2: |grad f|^2.
        lap_f: L_h f.
        f_t: Time derivative of f.
        X: gradf2 / U.
        Y: f_t / U.
        Z: X - Y.
        interior: Nodes at least BOUNDARY_CELLS away from both ends.
        model: Model manifold.
    """

    t: float
    r: np.ndarray
    u: np.ndarray
    m: float
    f: np.ndarray
    U: np.ndarray
    grad_f: np.ndarray
    f_rr: np.ndarray
    gradf2: np.ndarray
    lap_f: np.ndarray
    f_t: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    interior: np.ndarray
    model: ManifoldModel

    def gamma2(self) -> np.ndarray:
        """Gamma_2(f, f) from the stored derivatives."""
        return gamma2_from_derivatives(self.model, self.r, self.grad_f, self.f_rr)

    def region(self, fraction: Optional[float] = None) -> np.ndarray:
        """Interior mask, optionally restricted to u >= fraction * max u."""
        mask = self.interior.copy()
        if fraction is not None:
            mask &= self.u >= fraction * self.u.max()
        return mask

    def to_frame(self) -> pd.DataFrame:
        """Interior rows with columns t, r, u, f, U, X, Y, Z."""
        mask = self.interior
        return pd.DataFrame({
            "t": np.full(int(mask.sum()), self.t),
            "r": self.r[mask],
            "u": self.u[mask],
            "f": self.f[mask],
            "U": self.U[mask],
            "X": self.X[mask],
            "Y": self.Y[mask],
            "Z": self.Z[mask],
        })


def interior_mask(size: int, boundary_cells: int = BOUNDARY_CELLS) -> np.ndarray:
    mask = np.zeros(size, dtype=bool)
    mask[boundary_cells:size - boundary_cells] = True
    return mask


def _assemble(t, r, u, m, model, f, f_r, f_rr, f_t, interior) -> HopfFields:
    U = m * u ** (m - 1.0)
    gradf2 = f_r**2
    lap_f = laplacian_from_derivatives(model, r, f_r, f_rr)
    if f_t is None:
        f_t = U * lap_f + gradf2
    X = gradf2 / U
    Y = f_t / U
    return HopfFields(
        t=float(t), r=r, u=u, m=m, f=f, U=U, grad_f=f_r, f_rr=f_rr, gradf2=gradf2,
        lap_f=lap_f, f_t=f_t, X=X, Y=Y, Z=X - Y, interior=interior, model=model,
    )


def compute_fields(
    traj: SolutionTrajectory,
    k: int,
    mode: Optional[FieldMode] = None,
    boundary_cells: int = BOUNDARY_CELLS,
) -> HopfFields:
    """
    Hopf fields of snapshot k.

    Args:
        traj: Positive solution trajectory.
        k: Snapshot index.
        mode: TemporalDifference (centred difference of f between
            snapshots k-1 and k+1) or PdeIdentity (f_t = U (L_h f + X)).
            Defaults to default_mode(traj).
        boundary_cells: Cells excluded at each end in the interior mask.

    Returns:
        HopfFields for snapshot k.

    Raises:
        SnapshotIndexError: If k is out of range for the mode.
        NonPositiveSolutionError: If the snapshot has u <= 0.
    """
    mode = mode or default_mode(traj)
    last = traj.n_snapshots - 1
    if mode == FieldMode.TEMPORAL_DIFFERENCE:
        if not 0 < k < last:
            raise SnapshotIndexError(k, 1, last - 1)
    elif not 0 <= k <= last:
        raise SnapshotIndexError(k, 0, last)

    u = traj.values[k]
    if np.any(u <= 0):
        raise NonPositiveSolutionError(k)
    m, r = traj.m, traj.r
    f = hopf_transform(u, m)
    f_r, f_rr = radial_derivatives(r, f)

    f_t = None
    if mode == FieldMode.TEMPORAL_DIFFERENCE:
        f_prev = hopf_transform(traj.values[k - 1], m)
        f_next = hopf_transform(traj.values[k + 1], m)
        f_t = (f_next - f_prev) / (traj.times[k + 1] - traj.times[k - 1])

    interior = interior_mask(r.size, boundary_cells)
    return _assemble(traj.times[k], r, u, m, traj.model, f, f_r, f_rr, f_t, interior)


def compute_all_fields(
    traj: SolutionTrajectory,
    mode: Optional[FieldMode] = None,
    boundary_cells: int = BOUNDARY_CELLS,
) -> List[HopfFields]:
    """Hopf fields of every snapshot the mode allows, in time order."""
    mode = mode or default_mode(traj)
    last = traj.n_snapshots - 1
    indices = range(1, last) if mode == FieldMode.TEMPORAL_DIFFERENCE else range(0, last + 1)
    return [compute_fields(traj, k, mode, boundary_cells) for k in indices]


def fields_from_derivatives(
    t: float,
    r: ArrayLike,
    u: ArrayLike,
    u_r: ArrayLike,
    u_rr: ArrayLike,
    u_t: ArrayLike,
    m: float,
    model: ManifoldModel,
    boundary_cells: int = 0,
) -> HopfFields:
    """
    Hopf fields from analytic derivatives of u.

    Uses f' = m u^(m-2) u', f'' = m (m-2) u^(m-3) u'^2 + m u^(m-2) u''
    and f_t = m u^(m-2) u_t, so no finite differences enter.

    Raises:
        NonPositiveInputError: If any u <= 0.
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    u_r = np.asarray(u_r, dtype=float)
    u_rr = np.asarray(u_rr, dtype=float)
    u_t = np.asarray(u_t, dtype=float)
    f = hopf_transform(u, m)
    scale = m * u ** (m - 2.0)
    f_r = scale * u_r
    f_rr = scale * ((m - 2.0) * u_r**2 / u + u_rr)
    f_t = scale * u_t
    interior = interior_mask(r.size, boundary_cells)
    return _assemble(t, r, u, m, model, f, f_r, f_rr, f_t, interior)


def apply_A(fields: HopfFields, g: ArrayLike, model: Optional[ManifoldModel] = None) -> np.ndarray:
    """
    Apply A g = U L_h g + 2m <grad f, grad g> on the snapshot's grid.

    Args:
        fields: Hopf fields supplying U and grad f.
        g: Field on the same nodes.
        model: Model manifold; defaults to fields.model.

    Returns:
        A g at every node.
    """
    model = model or fields.model
    g_r, g_rr = radial_derivatives(fields.r, g)
    lap_g = laplacian_from_derivatives(model, fields.r, g_r, g_rr)
    return fields.U * lap_g + 2.0 * fields.m * fields.grad_f * g_r


@dataclass(frozen=True)
class EvolutionResiduals:
    """
    Residuals of the evolution identities at one snapshot.

    Attributes:
        t: Snapshot time.
        res_U: max |(A - d_t)U - (2m-1)(m-1) U X|.
        res_Y: max |(A - d_t)Y + (m-1) Y^2|.
        res_Z: max |(A - d_t)Z - 2 Gamma_2 - (m-1) Z^2|.
        ineq_defect_linear: min of (A - d_t)Z - (2/N) Z^2 + 2 K U (Z + Y).
        ineq_defect_squared: min of (A - d_t)Z - (2/N) Z^2 + 2 K U (Z + Y)^2.
        points: Number of nodes the extrema run over.
    """

    t: float
    res_U: float
    res_Y: float
    res_Z: float
    ineq_defect_linear: float
    ineq_defect_squared: float
    points: int

    def as_dict(self) -> dict:
        return {
            "t": self.t,
            "res_U": self.res_U,
            "res_Y": self.res_Y,
            "res_Z": self.res_Z,
            "ineq_defect_linear": self.ineq_defect_linear,
            "ineq_defect_squared": self.ineq_defect_squared,
            "points": self.points,
        }


def evolution_residuals(
    traj: SolutionTrajectory,
    k: int,
    model: Optional[ManifoldModel] = None,
    mode: Optional[FieldMode] = None,
    region_fraction: Optional[float] = None,
    boundary_cells: int = BOUNDARY_CELLS,
) -> EvolutionResiduals:
    """
    Residuals of the U, Y and Z evolution identities at snapshot k.

    Derived fields are stored at k-1, k, k+1 and differenced centrally
    in time. The curvature term of the Z inequality is evaluated both to
    the first power and squared; both minima are logged.

    Args:
        traj: Positive solution trajectory.
        k: Snapshot index; 1 < k < last-1 for TemporalDifference,
            0 < k < last for PdeIdentity.
        model: Model manifold; defaults to traj.model.
        mode: Field mode; defaults to default_mode(traj).
        region_fraction: Restrict to interior nodes with u >= fraction * max u.
        boundary_cells: Cells excluded at each end.

    Returns:
        EvolutionResiduals record.

    Raises:
        SnapshotIndexError: If k is out of range.
    """
    model = model or traj.model
    mode = mode or default_mode(traj)
    last = traj.n_snapshots - 1
    low = 2 if mode == FieldMode.TEMPORAL_DIFFERENCE else 1
    if not low <= k <= last - low:
        raise SnapshotIndexError(k, low, last - low)

    prev = compute_fields(traj, k - 1, mode, boundary_cells)
    cur = compute_fields(traj, k, mode, boundary_cells)
    nxt = compute_fields(traj, k + 1, mode, boundary_cells)
    span = nxt.t - prev.t
    m = traj.m

    def evolution(name: str) -> np.ndarray:
        g = getattr(cur, name)
        return apply_A(cur, g, model) - (getattr(nxt, name) - getattr(prev, name)) / span

    lhs_U = evolution("U")
    lhs_Y = evolution("Y")
    lhs_Z = evolution("Z")
    gamma2 = gamma2_from_derivatives(model, cur.r, cur.grad_f, cur.f_rr)

    res_U = lhs_U - (2.0 * m - 1.0) * (m - 1.0) * cur.U * cur.X
    res_Y = lhs_Y + (m - 1.0) * cur.Y**2
    res_Z = lhs_Z - 2.0 * gamma2 - (m - 1.0) * cur.Z**2

    N = 2.0 / (2.0 / model.n + m - 1.0)
    K = model.cd_constant()
    base = lhs_Z - (2.0 / N) * cur.Z**2
    linear = base + 2.0 * K * cur.U * (cur.Z + cur.Y)
    squared = base + 2.0 * K * cur.U * (cur.Z + cur.Y) ** 2

    mask = cur.region(region_fraction)
    if not np.any(mask):
        logger.warning("No nodes left for evolution residuals at t=%.6g", cur.t)
        nan = float("nan")
        return EvolutionResiduals(cur.t, nan, nan, nan, nan, nan, 0)

    result = EvolutionResiduals(
        t=cur.t,
        res_U=float(np.max(np.abs(res_U[mask]))),
        res_Y=float(np.max(np.abs(res_Y[mask]))),
        res_Z=float(np.max(np.abs(res_Z[mask]))),
        ineq_defect_linear=float(np.min(linear[mask])),
        ineq_defect_squared=float(np.min(squared[mask])),
        points=int(mask.sum()),
    )
    logger.info(
        "Z inequality at t=%.6g: min defect %.3e with K U (Z+Y), %.3e with K U (Z+Y)^2",
        cur.t, result.ineq_defect_linear, result.ineq_defect_squared,
    )
    return result
