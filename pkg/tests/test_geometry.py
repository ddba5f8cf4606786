"""
Unit tests for the model manifold and radial operators.

Tests verify that:
1. Warping functions and curvature constants are correct
2. The discrete Laplacian is exact on low-degree polynomials
3. Gamma_2 and the curvature-dimension defect match closed forms
4. Invalid grids and radii are rejected
"""

import numpy as np
import pytest

from src.geometry.manifold import (
    GeometryError,
    GridTooCoarseError,
    ManifoldKind,
    ManifoldModel,
    cd_defect,
    drift_coefficient,
    gamma2_radial,
    radial_derivatives,
    radial_laplacian,
)


# =============================================================================
# Fixtures
# =============================================================================

@pytest.fixture
def axis_nodes():
    """Uniform nodes starting on the axis."""
    return np.linspace(0.0, 2.0, 21)


@pytest.fixture
def offset_nodes():
    """Uniform nodes away from the axis."""
    return np.linspace(0.5, 3.0, 51)


@pytest.fixture
def h3():
    """Hyperbolic 3-space of curvature -1."""
    return ManifoldModel.hyperbolic(n=3, kappa=1.0)


# =============================================================================
# Test ManifoldModel
# =============================================================================

class TestManifoldModel:
    """Test model construction and derived constants."""

    def test_euclidean_is_flat(self):
        """Euclidean models should have K = 0."""
        model = ManifoldModel.euclidean(3)
        assert model.is_flat
        assert model.cd_constant() == 0.0

    def test_hyperbolic_cd_constant(self, h3):
        """K should equal (n-1) kappa."""
        assert h3.cd_constant() == 2.0
        assert not h3.is_flat

    def test_euclidean_kappa_coerced(self, caplog):
        """A nonzero kappa on a Euclidean model should be dropped with a warning."""
        model = ManifoldModel(ManifoldKind.EUCLIDEAN, 2, 0.7)
        assert model.kappa == 0.0
        assert "ignores kappa" in caplog.text

    def test_negative_kappa_rejected(self):
        """kappa < 0 is not a supported model."""
        with pytest.raises(GeometryError):
            ManifoldModel.hyperbolic(3, kappa=-1.0)

    def test_invalid_dimension_rejected(self):
        """Dimension must be a positive integer."""
        with pytest.raises(GeometryError):
            ManifoldModel.euclidean(0)

    def test_warp_hyperbolic(self, h3):
        """A(r) should be sinh(r) for kappa = 1."""
        r = np.array([0.0, 0.5, 2.0])
        assert np.allclose(h3.warp(r), np.sinh(r))

    def test_ricci_radial(self, h3):
        """Ric(d_r, d_r) should be -(n-1) kappa everywhere."""
        assert np.allclose(h3.ricci_radial(np.array([0.1, 1.0])), -2.0)

    def test_describe(self, h3):
        """describe() should list kind, n, kappa and K."""
        assert h3.describe() == {"kind": "Hyperbolic", "n": 3, "kappa": 1.0, "K": 2.0}


# =============================================================================
# Test Drift Coefficient
# =============================================================================

class TestDriftCoefficient:
    """Test (n-1) A'/A."""

    def test_euclidean_value(self):
        """(n-1)/r in R^3 at r = 2 is 1."""
        assert float(drift_coefficient(ManifoldModel.euclidean(3), 2.0)) == pytest.approx(1.0)

    def test_hyperbolic_value(self, h3):
        """(n-1) coth(r) on H^3 at r = 1."""
        assert float(drift_coefficient(h3, 1.0)) == pytest.approx(2.0 / np.tanh(1.0))

    def test_zero_on_axis(self, h3):
        """The axis value is 0."""
        assert float(drift_coefficient(h3, 0.0)) == 0.0

    def test_small_kappa_approaches_euclidean(self):
        """Hyperbolic drift should tend to the Euclidean one as kappa -> 0."""
        near_flat = ManifoldModel.hyperbolic(3, kappa=1e-10)
        r = np.array([0.5, 1.0, 2.0])
        assert np.allclose(drift_coefficient(near_flat, r), 2.0 / r, rtol=1e-8)

    def test_negative_radius_rejected(self):
        """Should raise GeometryError for r < 0."""
        with pytest.raises(GeometryError):
            drift_coefficient(ManifoldModel.euclidean(2), np.array([1.0, -0.1]))


# =============================================================================
# Test Radial Operators
# =============================================================================

class TestRadialLaplacian:
    """Test the discrete Laplace-Beltrami operator."""

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_quadratic_is_exact(self, axis_nodes, n):
        """Delta r^2 = 2n at every node, including the axis."""
        lap = radial_laplacian(ManifoldModel.euclidean(n), axis_nodes, axis_nodes**2)
        assert np.allclose(lap, 2.0 * n, atol=1e-9)

    def test_half_offset_nodes_use_reflection(self):
        """Cell-centred nodes should also give Delta r^2 = 2n."""
        h = 0.1
        r = (np.arange(20) + 0.5) * h
        lap = radial_laplacian(ManifoldModel.euclidean(2), r, r**2)
        assert np.allclose(lap, 4.0, atol=1e-9)

    def test_cosh_on_hyperbolic(self, h3):
        """Delta cosh(r) = 3 cosh(r) on H^3."""
        r = np.linspace(0.1, 2.0, 381)
        lap = radial_laplacian(h3, r, np.cosh(r))
        assert np.allclose(lap[1:-1], 3.0 * np.cosh(r[1:-1]), rtol=1e-4)

    def test_derivatives_of_quadratic(self, offset_nodes):
        """Centred and one-sided stencils are exact on quadratics."""
        g_r, g_rr = radial_derivatives(offset_nodes, offset_nodes**2)
        assert np.allclose(g_r, 2.0 * offset_nodes, atol=1e-10)
        assert np.allclose(g_rr, 2.0, atol=1e-8)

    def test_too_few_points(self):
        """Should raise GridTooCoarseError with fewer than 3 nodes."""
        with pytest.raises(GridTooCoarseError) as exc_info:
            radial_laplacian(ManifoldModel.euclidean(2), np.array([0.0, 1.0]), np.array([1.0, 1.0]))
        assert exc_info.value.points == 2

    def test_non_uniform_nodes_rejected(self):
        """Should raise GeometryError on non-uniform spacing."""
        r = np.array([0.0, 0.1, 0.3, 0.4])
        with pytest.raises(GeometryError):
            radial_laplacian(ManifoldModel.euclidean(2), r, r**2)


class TestGamma2:
    """Test Gamma_2(f, f)."""

    @pytest.mark.parametrize("n", [2, 3])
    def test_half_square_in_flat_space(self, axis_nodes, n):
        """Gamma_2(r^2/2) = |Hess|^2 = n in R^n."""
        g2 = gamma2_radial(ManifoldModel.euclidean(n), axis_nodes, axis_nodes**2 / 2.0)
        assert np.allclose(g2, float(n), atol=1e-9)

    def test_distance_function_on_hyperbolic_plane(self, offset_nodes):
        """Gamma_2(r) = coth^2 - 1 = 1/sinh^2 on H^2."""
        model = ManifoldModel.hyperbolic(2, kappa=1.0)
        g2 = gamma2_radial(model, offset_nodes, offset_nodes)
        assert np.allclose(g2, 1.0 / np.sinh(offset_nodes) ** 2, rtol=1e-9)


class TestCDDefect:
    """Test the curvature-dimension defect."""

    def test_zero_for_half_square(self, axis_nodes):
        """r^2/2 is the equality case in R^n."""
        defect = cd_defect(ManifoldModel.euclidean(3), axis_nodes, axis_nodes**2 / 2.0)
        assert np.allclose(defect, 0.0, atol=1e-9)

    def test_distance_function_on_hyperbolic_plane(self, offset_nodes):
        """Defect of f = r on H^2 is (n-1) coth^2 / n."""
        model = ManifoldModel.hyperbolic(2, kappa=1.0)
        defect = cd_defect(model, offset_nodes, offset_nodes)
        assert np.allclose(defect, 0.5 / np.tanh(offset_nodes) ** 2, rtol=1e-9)

    def test_nonnegative_for_smooth_field(self, h3):
        """A smooth radial field should never violate CD(n, -K)."""
        r = np.linspace(0.0, 5.0, 201)
        defect = cd_defect(h3, r, np.exp(-r**2) + 0.3 * np.sin(r))
        assert np.all(defect >= -1e-10)
