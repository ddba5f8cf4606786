"""
Unit tests for the implicit radial solver.

Tests verify that:
1. Configuration types validate their inputs
2. A single step matches a dense linear solve for m = 1
3. Mass is conserved and order is preserved under Neumann conditions
4. Solutions converge to the heat kernel
5. Failures carry the failing time
"""

import numpy as np
import pytest

from src.geometry.manifold import ManifoldModel
from src.solver.exact_solutions import (
    ExactKind,
    SelfSimilarParams,
    barenblatt,
    gaussian_heat_kernel,
    sample_trajectory,
)
from src.solver.pme_solver import (
    BoundaryCondition,
    BoundaryKind,
    NewtonDivergenceError,
    PositivityLossError,
    RadialGrid,
    Scheme,
    SolutionTrajectory,
    SolverConfig,
    SolverConfigError,
    SolverError,
    cell_volumes,
    discrete_mass,
    divergence_operator,
    face_weights,
    pde_residual,
    solve,
    step,
)


# =============================================================================
# Fixtures
# =============================================================================

@pytest.fixture
def small_grid():
    """Coarse grid for single-step tests."""
    return RadialGrid(r_max=2.0, cells=20)


@pytest.fixture
def h3():
    """Hyperbolic 3-space of curvature -1."""
    return ManifoldModel.hyperbolic(n=3, kappa=1.0)


@pytest.fixture
def bump(small_grid):
    """Positive bump over a unit floor."""
    return 1.0 + np.exp(-small_grid.nodes**2)


def dense_laplacian(model, grid):
    """Dense Neumann divergence operator assembled from weights and volumes."""
    trans = face_weights(model, grid) / grid.h
    trans[0] = 0.0
    trans[-1] = 0.0
    volumes = cell_volumes(model, grid)
    D = np.zeros((grid.cells, grid.cells))
    for i in range(grid.cells):
        D[i, i] = -(trans[i] + trans[i + 1]) / volumes[i]
        if i > 0:
            D[i, i - 1] = trans[i] / volumes[i]
        if i < grid.cells - 1:
            D[i, i + 1] = trans[i + 1] / volumes[i]
    return D


# =============================================================================
# Test Configuration Types
# =============================================================================

class TestRadialGrid:
    """Test the cell-centred grid."""

    def test_nodes_are_cell_centres(self, small_grid):
        """Nodes should sit at (i + 1/2) h."""
        assert small_grid.h == pytest.approx(0.1)
        assert small_grid.nodes[0] == pytest.approx(0.05)
        assert small_grid.nodes[-1] == pytest.approx(1.95)
        assert small_grid.faces.size == 21

    def test_refined(self, small_grid):
        """refined() should multiply the cell count."""
        assert small_grid.refined(4).cells == 80

    @pytest.mark.parametrize("r_max,cells", [(0.0, 10), (1.0, 2), (1.0, 10.5)])
    def test_invalid_grid(self, r_max, cells):
        """Should reject non-positive r_max and too few cells."""
        with pytest.raises(SolverConfigError):
            RadialGrid(r_max, cells)


class TestSolverConfig:
    """Test time window validation."""

    def test_defaults(self):
        """Defaults should be Newton with a Neumann outer boundary."""
        config = SolverConfig(dt=0.1, t0=0.1, t1=1.0)
        assert config.scheme == Scheme.IMPLICIT_NEWTON
        assert config.outer_bc.kind == BoundaryKind.NEUMANN_ZERO

    @pytest.mark.parametrize("dt,t0,t1", [(0.0, 0.1, 1.0), (0.1, 0.0, 1.0), (0.1, 1.0, 0.5)])
    def test_invalid_window(self, dt, t0, t1):
        """Should reject dt <= 0 and windows without 0 < t0 < t1."""
        with pytest.raises(SolverConfigError):
            SolverConfig(dt=dt, t0=t0, t1=t1)

    def test_dirichlet_needs_positive_value(self):
        """DirichletPositive with a zero value is invalid."""
        with pytest.raises(SolverConfigError):
            BoundaryCondition.dirichlet(0.0)

    def test_config_error_is_value_error(self):
        """Configuration errors should be catchable as ValueError."""
        with pytest.raises(ValueError):
            SolverConfig(dt=-1.0, t0=0.1, t1=1.0)


class TestSolutionTrajectory:
    """Test trajectory validation."""

    def test_rejects_non_positive_values(self, small_grid):
        """A trajectory must be strictly positive."""
        values = np.ones((2, small_grid.cells))
        values[1, 3] = 0.0
        with pytest.raises(PositivityLossError):
            SolutionTrajectory(np.array([0.1, 0.2]), values, 2.0, ManifoldModel.euclidean(2), small_grid)

    def test_rejects_shape_mismatch(self, small_grid):
        """Values must have one row per time and one column per cell."""
        with pytest.raises(SolverConfigError):
            SolutionTrajectory(np.array([0.1, 0.2]), np.ones((3, small_grid.cells)), 2.0,
                               ManifoldModel.euclidean(2), small_grid)

    def test_arrays_are_read_only(self, small_grid):
        """Stored snapshots should not be writable."""
        traj = SolutionTrajectory(np.array([0.1, 0.2]), np.ones((2, small_grid.cells)), 2.0,
                                  ManifoldModel.euclidean(2), small_grid)
        with pytest.raises(ValueError):
            traj.values[0, 0] = 5.0

    def test_to_frame(self, small_grid):
        """to_frame() should be long format with t, r, u."""
        traj = SolutionTrajectory(np.array([0.1, 0.2]), np.ones((2, small_grid.cells)), 2.0,
                                  ManifoldModel.euclidean(2), small_grid)
        df = traj.to_frame()
        assert list(df.columns) == ["t", "r", "u"]
        assert len(df) == 2 * small_grid.cells


# =============================================================================
# Test Divergence Operator
# =============================================================================

class TestDivergenceOperator:
    """Test the conservative discrete Laplacian."""

    def test_constant_has_zero_divergence(self, h3, small_grid):
        """D applied to a constant is 0 under Neumann conditions."""
        out = divergence_operator(np.full(small_grid.cells, 3.0), h3, small_grid, BoundaryCondition.neumann())
        assert np.allclose(out, 0.0, atol=1e-12)

    def test_dirichlet_constant_matches_boundary(self, h3, small_grid):
        """A constant equal to the Dirichlet value has zero divergence."""
        bc = BoundaryCondition.dirichlet(2.0)
        out = divergence_operator(np.full(small_grid.cells, 2.0), h3, small_grid, bc, g_boundary=2.0)
        assert np.allclose(out, 0.0, atol=1e-10)

    def test_weighted_sum_vanishes(self, h3, small_grid, bump):
        """Neumann fluxes telescope: sum V_i (D g)_i = 0."""
        out = divergence_operator(bump, h3, small_grid, BoundaryCondition.neumann())
        total = np.sum(cell_volumes(h3, small_grid) * out)
        assert abs(total) < 1e-10 * np.sum(np.abs(cell_volumes(h3, small_grid) * out))

    def test_simpson_volumes_euclidean(self):
        """Simpson volumes of r^2 are exact: sum equals r_max^3/3."""
        grid = RadialGrid(3.0, 30)
        assert np.sum(cell_volumes(ManifoldModel.euclidean(3), grid)) == pytest.approx(9.0, rel=1e-12)


# =============================================================================
# Test Single Steps
# =============================================================================

class TestStep:
    """Test one backward-Euler step."""

    @pytest.mark.parametrize("scheme", [Scheme.IMPLICIT_NEWTON, Scheme.SEMI_IMPLICIT])
    def test_constant_is_steady(self, h3, small_grid, scheme):
        """u = 1 is a steady state under Neumann conditions."""
        u = np.ones(small_grid.cells)
        out = step(u, 0.1, 2.0, h3, BoundaryCondition.neumann(), small_grid, scheme=scheme)
        assert np.allclose(out, 1.0, atol=1e-14)

    def test_heat_step_matches_dense_solve(self, small_grid, bump):
        """For m = 1 the step is the linear solve (I - dt D) v = u."""
        model = ManifoldModel.euclidean(3)
        dt = 0.01
        expected = np.linalg.solve(np.eye(small_grid.cells) - dt * dense_laplacian(model, small_grid), bump)
        out = step(bump, dt, 1.0, model, BoundaryCondition.neumann(), small_grid)
        assert np.allclose(out, expected, rtol=0.0, atol=1e-12)

    def test_picard_matches_newton_for_heat(self, h3, small_grid, bump):
        """Both schemes solve the same linear system when m = 1."""
        bc = BoundaryCondition.neumann()
        newton = step(bump, 0.05, 1.0, h3, bc, small_grid, scheme=Scheme.IMPLICIT_NEWTON)
        picard = step(bump, 0.05, 1.0, h3, bc, small_grid, scheme=Scheme.SEMI_IMPLICIT)
        assert np.allclose(newton, picard, atol=1e-10)

    def test_mass_conserved(self, h3, small_grid, bump):
        """Neumann steps conserve the discrete mass."""
        bc = BoundaryCondition.neumann()
        before = discrete_mass(bump, h3, small_grid)
        after = discrete_mass(step(bump, 0.05, 2.0, h3, bc, small_grid), h3, small_grid)
        assert abs(after - before) / before < 1e-10

    def test_barenblatt_step_refines(self):
        """One m = 2 step tracks the Barenblatt profile and the error shrinks with h and dt."""
        params = SelfSimilarParams(n=2, m=2.0)
        model = ManifoldModel.euclidean(2)
        floor, t0 = 1e-4, 1.0
        errors = []
        for cells, dt in ((100, 0.01), (200, 0.005)):
            grid = RadialGrid(6.0, cells)
            u0 = np.maximum(barenblatt(params, t0, grid.nodes), floor)
            out = step(u0, dt, 2.0, model, BoundaryCondition.dirichlet(floor), grid)
            exact = barenblatt(params, t0 + dt, grid.nodes)
            core = exact >= 0.1 * exact.max()
            errors.append(np.max(np.abs(out[core] - exact[core])))
        assert errors[0] < 1e-3
        assert errors[0] / errors[1] > 1.8

    def test_comparison_principle(self):
        """u <= v should give step(u) <= step(v)."""
        rng = np.random.default_rng(7)
        grid = RadialGrid(3.0, 30)
        model = ManifoldModel.euclidean(2)
        bc = BoundaryCondition.neumann()
        for _ in range(20):
            u = 0.5 + rng.random(grid.cells)
            v = u + 0.01 + rng.random(grid.cells)
            diff = step(v, 0.01, 2.0, model, bc, grid) - step(u, 0.01, 2.0, model, bc, grid)
            assert np.all(diff >= -1e-9)

    def test_rejects_non_positive_input(self, small_grid):
        """A zero entry should raise PositivityLossError."""
        u = np.ones(small_grid.cells)
        u[4] = 0.0
        with pytest.raises(PositivityLossError):
            step(u, 0.1, 2.0, ManifoldModel.euclidean(2), BoundaryCondition.neumann(), small_grid)

    def test_rejects_wrong_shape(self, small_grid):
        """Field and grid sizes must agree."""
        with pytest.raises(SolverConfigError):
            step(np.ones(5), 0.1, 2.0, ManifoldModel.euclidean(2), BoundaryCondition.neumann(), small_grid)


# =============================================================================
# Test Full Solves
# =============================================================================

class TestSolve:
    """Test time integration."""

    def test_heat_kernel_convergence(self):
        """The m = 1 solve from the heat kernel at t = 0.5 should track it to t = 1."""
        grid = RadialGrid(10.0, 200)
        model = ManifoldModel.euclidean(3)
        config = SolverConfig(dt=0.001, t0=0.5, t1=1.0)
        traj = solve(gaussian_heat_kernel(3, 0.5, grid.nodes), config, 1.0, model, grid)
        exact = gaussian_heat_kernel(3, 1.0, grid.nodes)
        assert np.max(np.abs(traj.values[-1] - exact)) <= 1e-2 * exact.max()

    def test_snapshot_times(self):
        """Snapshots should run from t0 to t1 in steps of dt."""
        grid = RadialGrid(5.0, 32)
        config = SolverConfig(dt=0.1, t0=0.1, t1=0.5)
        traj = solve(np.ones(grid.cells), config, 2.0, ManifoldModel.euclidean(2), grid)
        assert np.allclose(traj.times, [0.1, 0.2, 0.3, 0.4, 0.5])
        assert traj.source == "solver"

    def test_dt_adjusted_to_land_on_t1(self, caplog):
        """A dt that does not divide the window is shrunk with a warning."""
        grid = RadialGrid(5.0, 32)
        config = SolverConfig(dt=0.4, t0=0.1, t1=1.0)
        traj = solve(np.ones(grid.cells), config, 2.0, ManifoldModel.euclidean(2), grid)
        assert traj.times[-1] == pytest.approx(1.0)
        assert "adjusted" in caplog.text

    def test_hyperbolic_fast_diffusion_smoke(self):
        """A fast diffusion run on H^3 with a Dirichlet floor stays positive."""
        grid = RadialGrid(8.0, 64)
        bc = BoundaryCondition.dirichlet(0.1)
        config = SolverConfig(dt=0.01, t0=0.1, t1=0.3, outer_bc=bc)
        initial = 0.1 + np.exp(-((grid.nodes / 1.5) ** 2))
        traj = solve(initial, config, 0.75, ManifoldModel.hyperbolic(3, 0.25), grid)
        assert traj.values.shape == (21, 64)
        assert np.all(traj.values > 0)
        assert traj.values[-1].max() < initial.max()

    def test_failure_carries_time(self):
        """A stalled iteration should report the time of the failing step."""
        grid = RadialGrid(2.0, 20)
        config = SolverConfig(dt=0.1, t0=0.1, t1=0.5, newton_tol=1e-15, max_newton_iters=1)
        initial = 1.0 + np.exp(-grid.nodes**2)
        with pytest.raises(NewtonDivergenceError) as exc_info:
            solve(initial, config, 2.0, ManifoldModel.euclidean(2), grid)
        assert exc_info.value.time == pytest.approx(0.2)
        assert exc_info.value.iterations == 1
        assert "at t=0.2" in str(exc_info.value)
        assert isinstance(exc_info.value, SolverError)

    def test_initial_positivity(self):
        """Non-positive initial data is rejected at t0."""
        grid = RadialGrid(2.0, 20)
        with pytest.raises(PositivityLossError) as exc_info:
            solve(np.zeros(grid.cells), SolverConfig(dt=0.1, t0=0.1, t1=0.5), 2.0,
                  ManifoldModel.euclidean(2), grid)
        assert exc_info.value.time == pytest.approx(0.1)


# =============================================================================
# Test PDE Residual
# =============================================================================

class TestPdeResidual:
    """Test the space-time residual of sampled trajectories."""

    def test_constant_has_zero_residual(self):
        """u = 1 satisfies the equation exactly."""
        grid = RadialGrid(5.0, 32)
        traj = SolutionTrajectory(np.array([0.1, 0.2, 0.3]), np.ones((3, 32)), 2.0,
                                  ManifoldModel.hyperbolic(3), grid)
        assert pde_residual(traj) == 0.0

    def test_second_order_on_fast_diffusion(self):
        """Halving h and dt should divide the residual by about 4."""
        params = SelfSimilarParams(n=3, m=0.8)
        coarse = sample_trajectory(ExactKind.FAST_DIFFUSION, params, RadialGrid(5.0, 100),
                                   np.linspace(1.0, 1.2, 5))
        fine = sample_trajectory(ExactKind.FAST_DIFFUSION, params, RadialGrid(5.0, 200),
                                 np.linspace(1.0, 1.2, 9))
        order = np.log2(pde_residual(coarse) / pde_residual(fine))
        assert 1.5 < order < 2.5

    def test_needs_three_snapshots(self):
        """Fewer than 3 snapshots raise SolverConfigError."""
        grid = RadialGrid(5.0, 32)
        traj = SolutionTrajectory(np.array([0.1, 0.2]), np.ones((2, 32)), 2.0,
                                  ManifoldModel.euclidean(3), grid)
        with pytest.raises(SolverConfigError):
            pde_residual(traj)
