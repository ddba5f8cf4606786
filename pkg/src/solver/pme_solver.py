"""
Implicit Radial Solver for the Porous Medium Equation.

This module integrates u_t = Delta u^m on a rotationally symmetric model
manifold with a cell-centred finite volume discretization in divergence
form. Each backward-Euler step is solved either by Newton's method on a
tridiagonal Jacobian (ImplicitNewton) or by Picard iteration with the
diffusivity m u^(m-1) frozen from the previous iterate (SemiImplicit).

Every stored snapshot is strictly positive; a step that cannot keep the
iterate positive raises PositivityLossError instead of clipping.

Example:
    >>> from src.geometry import ManifoldModel
    >>> from src.solver.pme_solver import RadialGrid, SolverConfig, solve
    >>> grid = RadialGrid(r_max=5.0, cells=100)
    >>> config = SolverConfig(dt=0.01, t0=0.1, t1=1.0)
    >>> traj = solve(1.0 + np.exp(-grid.nodes**2), config, m=2.0,
    ...              model=ManifoldModel.euclidean(3), grid=grid)
    >>> traj.values.shape
    (91, 100)
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import solve_banded

from src.geometry.manifold import ManifoldModel, radial_laplacian
from src.utils.config import (
    BOUNDARY_CELLS,
    MAX_DAMPING_HALVINGS,
    MAX_NEWTON_ITERS,
    MIN_GRID_POINTS,
    NEWTON_TOL,
)

logger = logging.getLogger(__name__)


# =============================================================================
# Exceptions
# =============================================================================

class SolverConfigError(ValueError):
    """Raised when a grid, boundary condition or solver configuration is invalid."""
    pass


class SolverError(Exception):
    """Base exception for failures during time stepping."""

    def __init__(self, message: str, time: Optional[float] = None):
        self.time = time
        super().__init__(message)

    def __str__(self) -> str:
        base = super().__str__()
        if self.time is None:
            return base
        return f"{base} (at t={self.time:.6g})"


class PositivityLossError(SolverError):
    """Raised when an iterate or a step result is not strictly positive."""
    pass


class NewtonDivergenceError(SolverError):
    """Raised when the nonlinear iteration does not reach the tolerance."""

    def __init__(self, residual: float, iterations: int, time: Optional[float] = None):
        self.residual = residual
        self.iterations = iterations
        msg = f"Nonlinear iteration stalled at residual {residual:.3e} after {iterations} iterations"
        super().__init__(msg, time)


# =============================================================================
# Configuration types
# =============================================================================

class Scheme(Enum):
    """Nonlinear solution strategy for one backward-Euler step."""

    IMPLICIT_NEWTON = "ImplicitNewton"
    SEMI_IMPLICIT = "SemiImplicit"


class BoundaryKind(Enum):
    """Outer boundary condition at r = r_max."""

    DIRICHLET_POSITIVE = "DirichletPositive"
    NEUMANN_ZERO = "NeumannZero"


@dataclass(frozen=True)
class BoundaryCondition:
    """
    Outer boundary condition.

    Attributes:
        kind: DirichletPositive or NeumannZero.
        value: Boundary value for DirichletPositive (must be > 0).
    """

    kind: BoundaryKind = BoundaryKind.NEUMANN_ZERO
    value: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind == BoundaryKind.DIRICHLET_POSITIVE:
            if self.value is None or not self.value > 0:
                raise SolverConfigError(f"DirichletPositive value must be > 0, got {self.value}")

    @classmethod
    def dirichlet(cls, value: float) -> "BoundaryCondition":
        return cls(BoundaryKind.DIRICHLET_POSITIVE, float(value))

    @classmethod
    def neumann(cls) -> "BoundaryCondition":
        return cls(BoundaryKind.NEUMANN_ZERO)

    @property
    def is_dirichlet(self) -> bool:
        return self.kind == BoundaryKind.DIRICHLET_POSITIVE


@dataclass(frozen=True)
class RadialGrid:
    """
    Uniform cell-centred grid on [0, r_max].

    Cell i covers [i h, (i+1) h] and its node sits at r_i = (i + 1/2) h,
    so no node lies on the axis.
    """

    r_max: float
    cells: int

    def __post_init__(self) -> None:
        if not self.r_max > 0:
            raise SolverConfigError(f"r_max must be > 0, got {self.r_max}")
        if int(self.cells) != self.cells or self.cells < MIN_GRID_POINTS:
            raise SolverConfigError(f"cells must be an integer >= {MIN_GRID_POINTS}, got {self.cells}")
        object.__setattr__(self, "cells", int(self.cells))

    @property
    def h(self) -> float:
        return self.r_max / self.cells

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.h

    @property
    def faces(self) -> np.ndarray:
        return np.arange(self.cells + 1) * self.h

    def refined(self, factor: int = 2) -> "RadialGrid":
        """Same domain with `factor` times as many cells."""
        return RadialGrid(self.r_max, self.cells * factor)


@dataclass(frozen=True)
class SolverConfig:
    """Time window and nonlinear-solver settings for solve()."""

    dt: float
    t0: float
    t1: float
    scheme: Scheme = Scheme.IMPLICIT_NEWTON
    newton_tol: float = NEWTON_TOL
    max_newton_iters: int = MAX_NEWTON_ITERS
    outer_bc: BoundaryCondition = field(default_factory=BoundaryCondition.neumann)

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise SolverConfigError(f"dt must be > 0, got {self.dt}")
        if not 0 < self.t0 < self.t1:
            raise SolverConfigError(f"Need 0 < t0 < t1, got t0={self.t0}, t1={self.t1}")
        if not self.newton_tol > 0:
            raise SolverConfigError(f"newton_tol must be > 0, got {self.newton_tol}")
        if self.max_newton_iters < 1:
            raise SolverConfigError(f"max_newton_iters must be >= 1, got {self.max_newton_iters}")


# =============================================================================
# Trajectories
# =============================================================================

@dataclass(frozen=True)
class SolutionTrajectory:
    """
    Time-indexed snapshots of a positive radial solution.

    Attributes:
        times: Strictly increasing snapshot times, shape (K,).
        values: u(t_k, r_i), shape (K, cells). Every entry is > 0.
        m: Exponent of the equation.
        model: Model manifold the solution lives on.
        grid: Radial grid of the snapshots.
        source: "solver" for solve() output, "exact" for sampled closed forms.
    """

    times: np.ndarray
    values: np.ndarray
    m: float
    model: ManifoldModel
    grid: RadialGrid
    source: str = "solver"

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=float)
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape != (times.size, self.grid.cells):
            raise SolverConfigError(
                f"Snapshot array shape {values.shape} does not match "
                f"{times.size} times x {self.grid.cells} cells"
            )
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise SolverConfigError("Snapshot times must be strictly increasing")
        if not np.all(values > 0):
            raise PositivityLossError("Trajectory contains non-positive values")
        if not self.m > 0:
            raise SolverConfigError(f"m must be > 0, got {self.m}")
        times.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def n_snapshots(self) -> int:
        return self.times.size

    def to_frame(self) -> pd.DataFrame:
        """Long-format table with columns t, r, u."""
        t_col = np.repeat(self.times, self.grid.cells)
        r_col = np.tile(self.r, self.n_snapshots)
        return pd.DataFrame({"t": t_col, "r": r_col, "u": self.values.ravel()})


# =============================================================================
# Discrete divergence operator
# =============================================================================

def face_weights(model: ManifoldModel, grid: RadialGrid) -> np.ndarray:
    """Metric weights A(r)^(n-1) at the cell faces r = k h, k = 0..cells."""
    return model.warp(grid.faces) ** (model.n - 1)


def cell_volumes(model: ManifoldModel, grid: RadialGrid) -> np.ndarray:
    """Simpson-rule cell volumes of the weight A(r)^(n-1) over each cell."""
    w_faces = face_weights(model, grid)
    w_nodes = model.warp(grid.nodes) ** (model.n - 1)
    return grid.h / 6.0 * (w_faces[:-1] + 4.0 * w_nodes + w_faces[1:])


def _flux_bands(
    model: ManifoldModel,
    grid: RadialGrid,
    bc: BoundaryCondition,
    face_coeff: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """
    Tridiagonal bands of the divergence operator D g = (F_{i+1} - F_i)/V_i.

    Returns:
        (lower, diag, upper, boundary_coef) where
        (D g)_i = lower_i g_{i-1} + diag_i g_i + upper_i g_{i+1}, plus
        boundary_coef * g_b in the last cell under a Dirichlet condition.
    """
    h = grid.h
    volumes = cell_volumes(model, grid)
    trans = face_weights(model, grid) / h
    # Zero flux through the axis
    trans[0] = 0.0
    if bc.is_dirichlet:
        trans[-1] *= 2.0
    else:
        trans[-1] = 0.0
    if face_coeff is not None:
        trans = trans * face_coeff

    lower = trans[:-1] / volumes
    diag = -(trans[:-1] + trans[1:]) / volumes
    upper = np.zeros_like(volumes)
    upper[:-1] = trans[1:-1] / volumes[:-1]
    boundary_coef = float(trans[-1] / volumes[-1])
    return lower, diag, upper, boundary_coef


def _apply_bands(
    bands: Tuple[np.ndarray, np.ndarray, np.ndarray, float], g: np.ndarray, g_boundary: float
) -> np.ndarray:
    lower, diag, upper, boundary_coef = bands
    out = diag * g
    out[1:] += lower[1:] * g[:-1]
    out[:-1] += upper[:-1] * g[1:]
    out[-1] += boundary_coef * g_boundary
    return out


def _banded_system(
    bands: Tuple[np.ndarray, np.ndarray, np.ndarray, float], dt: float, scale: np.ndarray
) -> np.ndarray:
    """Matrix I - dt * D * diag(scale) in solve_banded (1, 1) layout."""
    lower, diag, upper, _ = bands
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = -dt * upper[:-1] * scale[1:]
    ab[1, :] = 1.0 - dt * diag * scale
    ab[2, :-1] = -dt * lower[1:] * scale[:-1]
    return ab


def divergence_operator(
    g: np.ndarray,
    model: ManifoldModel,
    grid: RadialGrid,
    bc: BoundaryCondition,
    g_boundary: float = 0.0,
) -> np.ndarray:
    """
    Apply the conservative discrete Laplacian to a cell field.

    Args:
        g: Cell values (typically u^m).
        model: Model manifold supplying the metric weights.
        grid: Radial grid.
        bc: Outer boundary condition.
        g_boundary: Value of g on the outer boundary (Dirichlet only).

    Returns:
        Flux differences divided by cell volumes.
    """
    bands = _flux_bands(model, grid, bc)
    return _apply_bands(bands, np.asarray(g, dtype=float), g_boundary)


# =============================================================================
# Time stepping
# =============================================================================

def _damped_update(v: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Halve the Newton step until the iterate stays positive."""
    lam = 1.0
    for halvings in range(MAX_DAMPING_HALVINGS + 1):
        candidate = v + lam * delta
        if np.all(candidate > 0):
            if halvings:
                logger.debug("Newton step damped by 2^-%d", halvings)
            return candidate
        lam *= 0.5
    raise PositivityLossError(
        f"Newton iterate stayed non-positive after {MAX_DAMPING_HALVINGS} step halvings"
    )


def _newton_step(u, dt, m, bands, phi_boundary, tol, max_iters) -> np.ndarray:
    v = u.copy()
    residual_norm = np.inf
    for iteration in range(max_iters + 1):
        residual = v - u - dt * _apply_bands(bands, v**m, phi_boundary)
        residual_norm = float(np.max(np.abs(residual)))
        logger.debug("Newton iteration %d: residual %.3e", iteration, residual_norm)
        if residual_norm <= tol:
            return v
        if iteration == max_iters:
            break
        ab = _banded_system(bands, dt, m * v ** (m - 1.0))
        delta = solve_banded((1, 1), ab, -residual)
        v = _damped_update(v, delta)
    raise NewtonDivergenceError(residual_norm, max_iters)


def _picard_step(u, dt, m, model, grid, bc, tol, max_iters) -> np.ndarray:
    v = u.copy()
    boundary_value = bc.value if bc.is_dirichlet else 0.0
    update_norm = np.inf
    for iteration in range(1, max_iters + 1):
        diffusivity = m * v ** (m - 1.0)
        face_coeff = np.ones(grid.cells + 1)
        face_coeff[1:-1] = 0.5 * (diffusivity[:-1] + diffusivity[1:])
        if bc.is_dirichlet:
            face_coeff[-1] = 0.5 * (diffusivity[-1] + m * boundary_value ** (m - 1.0))
        bands = _flux_bands(model, grid, bc, face_coeff)
        rhs = u.copy()
        rhs[-1] += dt * bands[3] * boundary_value
        ab = _banded_system(bands, dt, np.ones_like(v))
        v_new = solve_banded((1, 1), ab, rhs)
        if not np.all(v_new > 0):
            raise PositivityLossError("Picard iterate is not strictly positive")
        update_norm = float(np.max(np.abs(v_new - v)))
        logger.debug("Picard iteration %d: update %.3e", iteration, update_norm)
        v = v_new
        if update_norm <= tol:
            return v
    raise NewtonDivergenceError(update_norm, max_iters)


def step(
    u: np.ndarray,
    dt: float,
    m: float,
    model: ManifoldModel,
    bc: BoundaryCondition,
    grid: RadialGrid,
    scheme: Scheme = Scheme.IMPLICIT_NEWTON,
    newton_tol: float = NEWTON_TOL,
    max_newton_iters: int = MAX_NEWTON_ITERS,
) -> np.ndarray:
    """
    Advance a positive field by one backward-Euler step.

    Solves u+ - dt * D((u+)^m) = u, where D is the conservative radial
    Laplacian with zero axis flux and the given outer condition.

    Args:
        u: Current cell values, all > 0.
        dt: Time step (> 0).
        m: Exponent (> 0).
        model: Model manifold.
        bc: Outer boundary condition.
        grid: Radial grid matching u.
        scheme: ImplicitNewton or SemiImplicit.
        newton_tol: Absolute residual tolerance (update tolerance for Picard).
        max_newton_iters: Iteration cap.

    Returns:
        The new, strictly positive cell values.

    Raises:
        PositivityLossError: If u or any iterate is not strictly positive.
        NewtonDivergenceError: If the tolerance is not reached.
        SolverConfigError: If dt, m or the field shape is invalid.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.cells,):
        raise SolverConfigError(f"Field shape {u.shape} does not match grid of {grid.cells} cells")
    if not dt > 0:
        raise SolverConfigError(f"dt must be > 0, got {dt}")
    if not m > 0:
        raise SolverConfigError(f"m must be > 0, got {m}")
    if not np.all(u > 0):
        raise PositivityLossError("Input field is not strictly positive")

    if scheme == Scheme.SEMI_IMPLICIT:
        result = _picard_step(u, dt, m, model, grid, bc, newton_tol, max_newton_iters)
    else:
        bands = _flux_bands(model, grid, bc)
        phi_boundary = bc.value**m if bc.is_dirichlet else 0.0
        result = _newton_step(u, dt, m, bands, phi_boundary, newton_tol, max_newton_iters)

    if not np.all(result > 0):
        raise PositivityLossError("Step result is not strictly positive")
    return result


def solve(
    initial: np.ndarray,
    config: SolverConfig,
    m: float,
    model: ManifoldModel,
    grid: RadialGrid,
) -> SolutionTrajectory:
    """
    Integrate from config.t0 to config.t1 and keep every snapshot.

    The step count is ceil((t1 - t0)/dt); if dt does not divide the
    window it is shrunk so the last snapshot lands on t1.

    Args:
        initial: Positive cell values at t0.
        config: Time window and solver settings.
        m: Exponent (> 0).
        model: Model manifold.
        grid: Radial grid.

    Returns:
        SolutionTrajectory with source "solver".

    Raises:
        SolverError: Any step failure, with the failing time attached.
    """
    u = np.asarray(initial, dtype=float)
    if not np.all(u > 0):
        raise PositivityLossError("Initial data is not strictly positive", config.t0)

    span = config.t1 - config.t0
    steps = max(1, int(np.ceil(span / config.dt - 1e-9)))
    times = np.linspace(config.t0, config.t1, steps + 1)
    dt = span / steps
    if not np.isclose(dt, config.dt, rtol=1e-9):
        logger.warning("Time step adjusted from %.6g to %.6g to land on t1", config.dt, dt)

    logger.info(
        "Solving m=%.4g on %s n=%d (kappa=%.4g): %d cells, %d steps, %s",
        m, model.kind.value, model.n, model.kappa, grid.cells, steps, config.scheme.value,
    )
    snapshots = [u]
    for t_next in times[1:]:
        try:
            u = step(
                u, dt, m, model, config.outer_bc, grid,
                scheme=config.scheme,
                newton_tol=config.newton_tol,
                max_newton_iters=config.max_newton_iters,
            )
        except SolverError as err:
            err.time = float(t_next)
            raise
        snapshots.append(u)

    logger.info("Solve finished at t=%.6g", times[-1])
    return SolutionTrajectory(times, np.vstack(snapshots), m, model, grid, source="solver")


def discrete_mass(u: np.ndarray, model: ManifoldModel, grid: RadialGrid) -> float:
    """Discrete integral of u A(r)^(n-1) dr (without the sphere area factor)."""
    return float(np.sum(cell_volumes(model, grid) * np.asarray(u, dtype=float)))


def pde_residual(
    traj: SolutionTrajectory,
    region_fraction: Optional[float] = None,
    boundary_cells: int = BOUNDARY_CELLS,
) -> float:
    """
    Max |d_t u - Delta_h u^m| over interior space-time points.

    Time derivatives are centred differences between neighbouring
    snapshots; the Laplacian is the nondivergence radial operator of the
    geometry module, so sampled closed-form solutions need no boundary data.

    Args:
        traj: Trajectory with at least 3 snapshots.
        region_fraction: If given, only points with u >= fraction * max u
            (per snapshot) count.
        boundary_cells: Cells dropped at each end of the grid.

    Returns:
        The maximum residual (0.0 when no point qualifies).

    Raises:
        SolverConfigError: If fewer than 3 snapshots are stored.
    """
    if traj.n_snapshots < 3:
        raise SolverConfigError(f"pde_residual needs >= 3 snapshots, got {traj.n_snapshots}")

    r = traj.r
    interior = np.zeros(r.size, dtype=bool)
    interior[boundary_cells:r.size - boundary_cells] = True
    worst = 0.0
    for k in range(1, traj.n_snapshots - 1):
        u = traj.values[k]
        u_t = (traj.values[k + 1] - traj.values[k - 1]) / (traj.times[k + 1] - traj.times[k - 1])
        lap = radial_laplacian(traj.model, r, u**traj.m)
        mask = interior.copy()
        if region_fraction is not None:
            mask &= u >= region_fraction * u.max()
        if np.any(mask):
            worst = max(worst, float(np.max(np.abs(u_t - lap)[mask])))
    return worst
