"""
Unit tests for the pointwise verifier.

Tests verify that:
1. Self-similar solutions saturate the flat-space estimates
2. Constant solutions pass with margins equal to the bare bounds
3. Violations are detected
4. Preconditions raise before anything is evaluated
"""

import numpy as np
import pytest

from src.analysis.bounds import BoundParams, bigQ
from src.analysis.hopf import FieldMode, compute_all_fields, fields_from_derivatives
from src.analysis.verifier import (
    CD_NOTE,
    POINT_COLUMNS,
    CheckId,
    CheckPreconditionError,
    ModelNotFlatError,
    check_aronson_benilan,
    check_cd,
    check_family_bound,
    check_li_yau,
    check_thm_a1,
    check_thm_a2,
    check_thm_b,
    curvature_scale,
    family_margin,
    saturation_error,
)
from src.geometry.manifold import ManifoldModel
from src.solver.exact_solutions import ExactKind, SelfSimilarParams, sample_trajectory
from src.solver.pme_solver import RadialGrid, SolutionTrajectory


# =============================================================================
# Fixtures
# =============================================================================

@pytest.fixture(scope="module")
def barenblatt_fields():
    """Barenblatt fields, n = 2, m = 2, t in [1, 1.2]."""
    traj = sample_trajectory(ExactKind.BARENBLATT, SelfSimilarParams(n=2, m=2.0),
                             RadialGrid(6.0, 600), np.linspace(1.0, 1.2, 5))
    return compute_all_fields(traj, FieldMode.PDE_IDENTITY)


@pytest.fixture(scope="module")
def fast_diffusion_fields():
    """Fast diffusion self-similar fields, n = 3, m = 0.8."""
    traj = sample_trajectory(ExactKind.FAST_DIFFUSION, SelfSimilarParams(n=3, m=0.8),
                             RadialGrid(8.0, 400), np.linspace(1.0, 1.2, 5))
    return compute_all_fields(traj, FieldMode.PDE_IDENTITY)


@pytest.fixture(scope="module")
def gaussian_fields():
    """Heat kernel fields in the plane."""
    traj = sample_trajectory(ExactKind.GAUSSIAN, SelfSimilarParams(n=2, m=1.0),
                             RadialGrid(6.0, 300), np.linspace(0.5, 1.0, 6), floor=1e-300)
    return compute_all_fields(traj, FieldMode.PDE_IDENTITY)


@pytest.fixture
def h3():
    """Hyperbolic 3-space of curvature -1."""
    return ManifoldModel.hyperbolic(3, 1.0)


@pytest.fixture
def constant_fields(h3):
    """u = 1 on H^3 with m = 2."""
    traj = SolutionTrajectory(np.array([0.1, 0.2, 0.3]), np.ones((3, 40)), 2.0, h3, RadialGrid(5.0, 40))
    return compute_all_fields(traj, FieldMode.PDE_IDENTITY)


# =============================================================================
# Test Saturation Oracles
# =============================================================================

class TestSaturation:
    """Self-similar solutions are the equality cases."""

    def test_aronson_benilan_saturated(self, barenblatt_fields):
        """Barenblatt passes with a minimum margin of essentially zero."""
        report = check_aronson_benilan(barenblatt_fields, ManifoldModel.euclidean(2), 2.0, support_cutoff=0.05)
        assert report.passed
        assert abs(report.min_margin) < 1e-8
        assert list(report.points.columns) == POINT_COLUMNS

    def test_thm_a2_saturated(self, barenblatt_fields):
        """With c = max Z at t = 1 the shifted bound equals N/(2t)."""
        report = check_thm_a2(barenblatt_fields, ManifoldModel.euclidean(2), 2.0, support_cutoff=0.05)
        assert report.passed
        assert report.extras["c"] == pytest.approx(0.5)
        assert report.extras["t_origin"] == pytest.approx(1.0)
        assert abs(report.min_margin) < 1e-8

    def test_thm_b_flat(self, barenblatt_fields):
        """On flat space both regimes reduce to Z <= N/(2t)."""
        report = check_thm_b(barenblatt_fields, ManifoldModel.euclidean(2), 2.0, support_cutoff=0.05)
        assert report.passed
        assert report.extras["R"] == 0.0
        assert set(report.sub_reports) == {"regime_upper", "regime_lower"}
        assert abs(report.min_margin) < 1e-8

        classical = check_aronson_benilan(barenblatt_fields, ManifoldModel.euclidean(2), 2.0, support_cutoff=0.05)
        assert report.min_margin == pytest.approx(classical.min_margin, abs=1e-12)
        assert report.extras["points_upper"] + report.extras["points_lower"] == classical.mask.sum()

    def test_family_bound_flat(self, barenblatt_fields):
        """With R = 0 every member of the family is N/(2t)."""
        report = check_family_bound(barenblatt_fields, ManifoldModel.euclidean(2), 2.0, [0.0, 1.0],
                                    support_cutoff=0.05)
        assert report.passed
        assert set(report.sub_reports) == {"y=0", "y=1"}

    def test_cd_equality(self, barenblatt_fields):
        """Quadratic f is the CD(n, 0) equality case."""
        report = check_cd(barenblatt_fields, ManifoldModel.euclidean(2), 2.0, support_cutoff=0.05)
        assert report.passed

    def test_thm_a1_flat(self, fast_diffusion_fields):
        """With K = 0 the fast diffusion bound is saturated."""
        report = check_thm_a1(fast_diffusion_fields, ManifoldModel.euclidean(3), 0.8)
        assert report.passed
        assert report.extras["lhs_identity_gap"] < 1e-8

    def test_li_yau_saturated(self, gaussian_fields):
        """The heat kernel is the Li-Yau equality case."""
        report = check_li_yau(gaussian_fields, ManifoldModel.euclidean(2), 1.0)
        assert report.passed
        assert abs(report.min_margin) < 1e-6

    def test_saturation_error(self, barenblatt_fields):
        """max |2tZ/N - 1| vanishes for Barenblatt."""
        assert saturation_error(barenblatt_fields, 1.0) < 1e-8


# =============================================================================
# Test Constant Solutions
# =============================================================================

class TestConstantSolution:
    """u = 1 on H^3: all fields vanish."""

    def test_curvature_scale(self, constant_fields, h3):
        """R = K max U = 2 * 2."""
        assert curvature_scale(constant_fields, h3) == pytest.approx(4.0)

    def test_thm_b_margin_is_bound(self, constant_fields, h3):
        """Every point is in the upper regime with margin Q(t, 0)."""
        report = check_thm_b(constant_fields, h3, 2.0)
        assert report.passed
        assert report.extras["points_lower"] == 0
        assert report.extras["points_upper"] == 3 * 36
        expected = float(bigQ(0.3, 0.0, report.params.N, report.params.R))
        assert report.min_margin == pytest.approx(expected)

    def test_family_bound(self, constant_fields, h3):
        """Every y sample passes, including the lower end of the domain."""
        report = check_family_bound(constant_fields, h3, 2.0, [-1.2, 0.0, 4.8, 19.2])
        assert report.passed
        assert len(report.sub_reports) == 4
        assert report.notes

    def test_family_margin_reproduces_upper_regime(self, constant_fields, h3):
        """Choosing y = Y pointwise gives Q(t, Y) - X."""
        params = BoundParams.from_model(2.0, h3, R=4.0)
        fl = constant_fields[0]
        expected = bigQ(fl.t, fl.Y, params.N, params.R) - fl.X
        assert np.allclose(family_margin(fl, fl.Y, params), expected)

    def test_cd_zero_margin(self, constant_fields, h3):
        """A constant field has zero CD defect and passes."""
        report = check_cd(constant_fields, h3, 2.0)
        assert report.passed
        assert report.min_margin == 0.0

    @pytest.mark.parametrize("model", [ManifoldModel.euclidean(3), ManifoldModel.hyperbolic(3, 0.5)])
    def test_cd_holds_for_arbitrary_derivatives(self, model):
        """Derivative data unrelated to any solution still has a non-negative CD defect."""
        rng = np.random.default_rng(11)
        r = np.linspace(0.1, 4.0, 80)
        u = 0.5 + rng.random(r.size)
        fields = fields_from_derivatives(1.0, r, u, rng.normal(size=r.size), rng.normal(size=r.size),
                                         rng.normal(size=r.size), m=2.0, model=model)
        report = check_cd([fields], model, 2.0)
        assert report.passed
        assert (report.margins >= -1e-12 * (1.0 + report.applicable_points["bound"].abs())).all()
        assert CD_NOTE in report.notes


# =============================================================================
# Test Violations and Reports
# =============================================================================

class TestViolations:
    """Checks must fail when the bound is exceeded."""

    def test_wrong_exponent_fails(self, barenblatt_fields):
        """Checking m = 2 data against the m = 2.5 bound fails."""
        report = check_aronson_benilan(barenblatt_fields, ManifoldModel.euclidean(2), 2.5, support_cutoff=0.05)
        assert not report.passed
        assert report.min_margin < 0
        assert report.worst_slack < 0

    def test_summary_keys(self, barenblatt_fields):
        """summary() holds the scalars written to summary.json."""
        summary = check_thm_a2(barenblatt_fields, ManifoldModel.euclidean(2), 2.0, support_cutoff=0.05).summary()
        assert summary["check_id"] == "ThmA2"
        for key in ("params", "min_margin", "tolerance", "passed", "points", "notes", "extras"):
            assert key in summary


class TestPreconditions:
    """Parameter ranges are checked up front."""

    def test_aronson_benilan_needs_flat(self, constant_fields, h3):
        """K > 0 raises ModelNotFlatError."""
        with pytest.raises(ModelNotFlatError) as exc_info:
            check_aronson_benilan(constant_fields, h3, 2.0)
        assert exc_info.value.K == 2.0
        assert exc_info.value.check_id == CheckId.AB_CLASSICAL

    def test_thm_a2_needs_flat(self, constant_fields, h3):
        """ThmA2 also needs K = 0."""
        with pytest.raises(ModelNotFlatError):
            check_thm_a2(constant_fields, h3, 2.0)

    def test_thm_a1_exponent(self, barenblatt_fields):
        """ThmA1 rejects m = 2."""
        with pytest.raises(CheckPreconditionError) as exc_info:
            check_thm_a1(barenblatt_fields, ManifoldModel.euclidean(2), 2.0)
        assert exc_info.value.check_id == CheckId.THM_A1

    def test_thm_b_exponent(self, fast_diffusion_fields):
        """ThmB needs m > 1."""
        with pytest.raises(CheckPreconditionError):
            check_thm_b(fast_diffusion_fields, ManifoldModel.euclidean(3), 0.8)

    def test_li_yau_exponent(self, barenblatt_fields):
        """Li-Yau needs m = 1."""
        with pytest.raises(CheckPreconditionError):
            check_li_yau(barenblatt_fields, ManifoldModel.euclidean(2), 2.0)

    def test_family_below_domain(self, constant_fields, h3):
        """A y sample below -NR/4 is rejected."""
        with pytest.raises(CheckPreconditionError):
            check_family_bound(constant_fields, h3, 2.0, [-5.0])

    def test_empty_fields(self):
        """A check needs at least one snapshot."""
        with pytest.raises(CheckPreconditionError):
            check_cd([], ManifoldModel.euclidean(2), 2.0)
