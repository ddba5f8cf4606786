"""
Pointwise Verification of the Gradient Estimates.

Each check evaluates one inequality over a space-time set of HopfFields
and returns a VerificationReport with per-point rows:

    ThmA1         X - Y <= N/(2t) + 2 K m u^(m-1)/((1-m)(2m-1))   (1/2 < m < 1)
    ThmA2         Z <= (2(t - t_0)/N + 1/c)^(-1)                  (K = 0)
    ThmB          X <= Q(t, Y) or X - Y <= N/(2t) + NR/2          (m > 1)
    FamilyBound   X - Y <= C(t, y) + dC/dy(t, y) (Y - y)          (m > 1)
    AB_Classical  Z <= N/(2t)                                     (K = 0)
    LiYau_K0      |grad f|^2 - f_t <= n/(2t)                      (m = 1, K = 0)
    CD_Condition  Gamma_2(f, f) >= (Lf)^2/n - K |grad f|^2

A point passes when margin = bound - quantity >= -tolerance, with the
pointwise tolerance tol_scale * max(|bound|, N/(2t)).

Example:
    >>> from src.analysis.hopf import compute_all_fields
    >>> from src.analysis.verifier import check_aronson_benilan
    >>> report = check_aronson_benilan(compute_all_fields(traj), traj.model, traj.m)
    >>> report.passed, report.min_margin
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.analysis.bounds import (
    BoundParams,
    BoundsRangeError,
    bigQ,
    capC,
    dC_dy,
    thm_a1_rhs,
    thm_a2_display_rhs,
    thm_a2_rhs,
)
from src.analysis.hopf import HopfFields
from src.geometry.manifold import ManifoldModel
from src.utils.config import SATURATION_REGION, TOL_SCALE

logger = logging.getLogger(__name__)

POINT_COLUMNS = [
    "t", "r", "u", "f", "U", "X", "Y", "Z",
    "bound", "margin", "tolerance", "applicable", "regime", "check_id",
]

R_NOTE = (
    "R is the maximum of K*U over the interior space-time grid points, "
    "an approximation of the global supremum"
)

CD_NOTE = (
    "the radial CD defect is a sum of squares in f_r and f_rr, so this check "
    "records consistency of the derivative fields rather than a property of u"
)


# =============================================================================
# Exceptions
# =============================================================================

class CheckPreconditionError(ValueError):
    """Raised when a check's parameter preconditions are not met."""

    def __init__(self, check_id: "CheckId", detail: str):
        self.check_id = check_id
        super().__init__(f"{check_id.value}: {detail}")


class ModelNotFlatError(CheckPreconditionError):
    """Raised when a check needs K = 0 but the model is curved."""

    def __init__(self, check_id: "CheckId", K: float):
        self.K = K
        super().__init__(check_id, f"requires a flat model (K = 0), got K = {K:.6g}")


# =============================================================================
# Reports
# =============================================================================

class CheckId(Enum):
    """Identifiers of the available checks."""

    THM_A1 = "ThmA1"
    THM_A2 = "ThmA2"
    THM_B = "ThmB"
    AB_CLASSICAL = "AB_Classical"
    LI_YAU_K0 = "LiYau_K0"
    CD_CONDITION = "CD_Condition"
    FAMILY_BOUND = "FamilyBound"


@dataclass
class VerificationReport:
    """
    Outcome of one check.

    Attributes:
        check_id: Which inequality was checked.
        params: Scalars entering the bound.
        points: Per-point rows (see POINT_COLUMNS). Margins are NaN where
            `applicable` is False.
        tol_scale: Relative tolerance factor.
        notes: Free-text remarks carried into the summary.
        sub_reports: Named partial reports (regimes, y samples).
        extras: Additional scalars (c, R, variant margins, ...).
    """

    check_id: CheckId
    params: BoundParams
    points: pd.DataFrame
    tol_scale: float = TOL_SCALE
    notes: List[str] = field(default_factory=list)
    sub_reports: Dict[str, "VerificationReport"] = field(default_factory=dict)
    extras: Dict[str, float] = field(default_factory=dict)

    @property
    def mask(self) -> pd.Series:
        return self.points["applicable"].astype(bool)

    @property
    def applicable_points(self) -> pd.DataFrame:
        return self.points[self.mask]

    @property
    def margins(self) -> pd.Series:
        return self.applicable_points["margin"]

    @property
    def min_margin(self) -> float:
        margins = self.margins
        return float(margins.min()) if len(margins) else float("nan")

    @property
    def tolerance(self) -> float:
        """Tolerance at the point of minimum margin."""
        rows = self.applicable_points
        if rows.empty:
            return float("nan")
        return float(rows.loc[rows["margin"].idxmin(), "tolerance"])

    @property
    def worst_slack(self) -> float:
        """Minimum of margin + tolerance over applicable points."""
        rows = self.applicable_points
        if rows.empty:
            return float("nan")
        return float((rows["margin"] + rows["tolerance"]).min())

    @property
    def passed(self) -> bool:
        rows = self.applicable_points
        if rows.empty:
            return all(sub.passed for sub in self.sub_reports.values())
        own = bool(((rows["margin"] + rows["tolerance"]) >= 0).all())
        return own and all(sub.passed for sub in self.sub_reports.values())

    def summary(self) -> dict:
        """Structured summary used for summary.json."""
        return {
            "check_id": self.check_id.value,
            "params": self.params.as_dict(),
            "min_margin": self.min_margin,
            "tolerance": self.tolerance,
            "worst_slack": self.worst_slack,
            "passed": self.passed,
            "points": int(self.mask.sum()),
            "notes": list(self.notes),
            "extras": dict(self.extras),
            "sub_reports": {name: sub.summary() for name, sub in self.sub_reports.items()},
        }


# =============================================================================
# Helpers
# =============================================================================

def applicability_mask(fields: HopfFields, support_cutoff: Optional[float] = None) -> np.ndarray:
    """Interior nodes, dropping u < support_cutoff * max u when a cutoff is given."""
    return fields.region(support_cutoff)


def _rows(
    fields: HopfFields,
    bound: np.ndarray,
    quantity: np.ndarray,
    applicable: np.ndarray,
    tolerance: np.ndarray,
    check_id: CheckId,
    regime: str = "",
) -> pd.DataFrame:
    """Per-point table over the interior nodes of one snapshot."""
    keep = fields.interior
    bound = np.broadcast_to(np.asarray(bound, dtype=float), fields.r.shape)
    quantity = np.broadcast_to(np.asarray(quantity, dtype=float), fields.r.shape)
    tolerance = np.broadcast_to(np.asarray(tolerance, dtype=float), fields.r.shape)
    applicable = applicable & keep
    margin = np.where(applicable, bound - quantity, np.nan)
    return pd.DataFrame({
        "t": np.full(int(keep.sum()), fields.t),
        "r": fields.r[keep],
        "u": fields.u[keep],
        "f": fields.f[keep],
        "U": fields.U[keep],
        "X": fields.X[keep],
        "Y": fields.Y[keep],
        "Z": fields.Z[keep],
        "bound": bound[keep],
        "margin": margin[keep],
        "tolerance": tolerance[keep],
        "applicable": applicable[keep],
        "regime": regime,
        "check_id": check_id.value,
    }, columns=POINT_COLUMNS)


def _concat(frames: List[pd.DataFrame]) -> pd.DataFrame:
    if not frames:
        return pd.DataFrame(columns=POINT_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def _tolerance(bound: np.ndarray, N: float, t: float, tol_scale: float) -> np.ndarray:
    return tol_scale * np.maximum(np.abs(bound), N / (2.0 * t))


def _params(check_id: CheckId, m: float, model: ManifoldModel, R: float = 0.0, c: float = math.inf) -> BoundParams:
    try:
        return BoundParams.from_model(m, model, R=R, c=c)
    except BoundsRangeError as err:
        raise CheckPreconditionError(check_id, str(err)) from err


def _require_flat(check_id: CheckId, model: ManifoldModel) -> None:
    if model.cd_constant() != 0.0:
        raise ModelNotFlatError(check_id, model.cd_constant())


def _require_fields(check_id: CheckId, fields_list: Sequence[HopfFields]) -> None:
    if not fields_list:
        raise CheckPreconditionError(check_id, "needs at least one snapshot of fields")


def curvature_scale(fields_list: Sequence[HopfFields], model: ManifoldModel,
                    support_cutoff: Optional[float] = None) -> float:
    """R = K * max U over the interior of every snapshot."""
    K = model.cd_constant()
    if K == 0.0:
        return 0.0
    peak = max(float(np.max(fl.U[applicability_mask(fl, support_cutoff)], initial=0.0)) for fl in fields_list)
    return K * peak


def thm_a1_lhs_direct(fields: HopfFields) -> np.ndarray:
    """
    m |grad u|^2 / u^(3-m) - u_t/u recovered algebraically from the stored fields.

    Uses grad u = u^(2-m) grad f / m and u_t = u^(2-m) f_t / m.
    """
    m, u = fields.m, fields.u
    grad_u = u ** (2.0 - m) * fields.grad_f / m
    u_t = u ** (2.0 - m) * fields.f_t / m
    return m * grad_u**2 / u ** (3.0 - m) - u_t / u


def saturation_error(fields_list: Sequence[HopfFields], N: float,
                     region_fraction: float = SATURATION_REGION) -> float:
    """max |2t Z/N - 1| over interior nodes with u >= region_fraction * max u."""
    worst = 0.0
    for fl in fields_list:
        mask = fl.region(region_fraction)
        if np.any(mask):
            worst = max(worst, float(np.max(np.abs(2.0 * fl.t * fl.Z[mask] / N - 1.0))))
    return worst


# =============================================================================
# Checks
# =============================================================================

def check_thm_a1(
    fields_list: Sequence[HopfFields],
    model: ManifoldModel,
    m: float,
    tol_scale: float = TOL_SCALE,
    support_cutoff: Optional[float] = None,
) -> VerificationReport:
    """
    Fast diffusion estimate X - Y <= N/(2t) + 2Km u^(m-1)/((1-m)(2m-1)).

    Raises:
        CheckPreconditionError: Unless max(1/2, 1 - 2/n) < m < 1.
    """
    check_id = CheckId.THM_A1
    _require_fields(check_id, fields_list)
    if not (0.5 < m < 1.0 and m > 1.0 - 2.0 / model.n):
        raise CheckPreconditionError(check_id, f"needs max(1/2, 1-2/n) < m < 1, got m={m}, n={model.n}")
    params = _params(check_id, m, model)

    frames, identity_gap = [], 0.0
    for fl in fields_list:
        bound = thm_a1_rhs(fl.t, fl.u, m, model.n, params.K)
        quantity = fl.X - fl.Y
        mask = applicability_mask(fl, support_cutoff)
        if np.any(mask):
            identity_gap = max(identity_gap, float(np.max(np.abs(thm_a1_lhs_direct(fl) - quantity)[mask])))
        tol = _tolerance(bound, params.N, fl.t, tol_scale)
        frames.append(_rows(fl, bound, quantity, mask, tol, check_id))

    report = VerificationReport(check_id, params, _concat(frames), tol_scale)
    report.extras["lhs_identity_gap"] = identity_gap
    logger.info("%s: min margin %.3e, passed=%s", check_id.value, report.min_margin, report.passed)
    return report


def check_thm_a2(
    fields_list: Sequence[HopfFields],
    model: ManifoldModel,
    m: float,
    tol_scale: float = TOL_SCALE,
    support_cutoff: Optional[float] = None,
) -> VerificationReport:
    """
    Flat-space estimate from an initial bound: Z(t) <= (2(t - t_0)/N + 1/c)^(-1).

    The first snapshot of `fields_list` plays the role of time 0 and
    c = max(0, max Z) over its applicable nodes. Margins are reported for
    every later snapshot. The display variant c/((N/2t)c + 1) is
    evaluated alongside and its minimum margin stored in the extras.

    Raises:
        ModelNotFlatError: If K != 0.
        CheckPreconditionError: If m <= 1 - 2/n or fewer than two snapshots.
    """
    check_id = CheckId.THM_A2
    _require_flat(check_id, model)
    if len(fields_list) < 2:
        raise CheckPreconditionError(check_id, "needs at least two snapshots of fields")

    first = fields_list[0]
    first_mask = applicability_mask(first, support_cutoff)
    c = max(0.0, float(np.max(first.Z[first_mask], initial=0.0)))
    params = _params(check_id, m, model, c=c)
    t_origin = first.t

    frames, display_margin = [], math.inf
    for fl in fields_list[1:]:
        elapsed = fl.t - t_origin
        bound = np.full(fl.r.shape, float(thm_a2_rhs(elapsed, c, params.N)))
        mask = applicability_mask(fl, support_cutoff)
        tol = _tolerance(bound, params.N, fl.t, tol_scale)
        frames.append(_rows(fl, bound, fl.Z, mask, tol, check_id))
        if np.any(mask):
            display = float(thm_a2_display_rhs(elapsed, c, params.N))
            display_margin = min(display_margin, float(np.min(display - fl.Z[mask])))

    report = VerificationReport(check_id, params, _concat(frames), tol_scale)
    report.extras.update({"c": c, "t_origin": t_origin, "display_variant_min_margin": display_margin})
    report.notes.append(
        f"time measured from t_origin={t_origin:.6g}; c is the maximum of Z at that snapshot"
    )
    report.notes.append("display variant c/((N/2t)c+1) reported in extras only")
    logger.info("%s: c=%.6g, min margin %.3e, display-variant min margin %.3e",
                check_id.value, c, report.min_margin, display_margin)
    return report


def _thm_b_regimes(fl: HopfFields, params: BoundParams):
    threshold = params.regime_threshold
    upper = fl.Y > threshold
    y_clipped = np.where(upper, fl.Y, threshold)
    bound_upper = bigQ(fl.t, y_clipped, params.N, params.R)
    bound_lower = np.full(fl.r.shape, params.N / (2.0 * fl.t) + params.N * params.R / 2.0)
    return upper, bound_upper, bound_lower


def check_thm_b(
    fields_list: Sequence[HopfFields],
    model: ManifoldModel,
    m: float,
    tol_scale: float = TOL_SCALE,
    support_cutoff: Optional[float] = None,
    R: Optional[float] = None,
) -> VerificationReport:
    """
    Porous medium estimate under CD(n, -K) with R = sup K U.

    Regime 1 (Y > -NR/4): X <= Q(t, Y).
    Regime 2 (Y <= -NR/4): X - Y <= N/(2t) + NR/2.

    Raises:
        CheckPreconditionError: If m <= 1.
    """
    check_id = CheckId.THM_B
    _require_fields(check_id, fields_list)
    if not m > 1:
        raise CheckPreconditionError(check_id, f"needs m > 1, got m={m}")
    if R is None:
        R = curvature_scale(fields_list, model, support_cutoff)
    params = _params(check_id, m, model, R=R)

    upper_frames, lower_frames = [], []
    for fl in fields_list:
        mask = applicability_mask(fl, support_cutoff)
        upper, bound_upper, bound_lower = _thm_b_regimes(fl, params)
        tol_upper = _tolerance(bound_upper, params.N, fl.t, tol_scale)
        tol_lower = _tolerance(bound_lower, params.N, fl.t, tol_scale)
        upper_frames.append(_rows(fl, bound_upper, fl.X, mask & upper, tol_upper, check_id, "upper"))
        lower_frames.append(_rows(fl, bound_lower, fl.X - fl.Y, mask & ~upper, tol_lower, check_id, "lower"))

    upper_report = VerificationReport(check_id, params, _concat(upper_frames), tol_scale)
    lower_report = VerificationReport(check_id, params, _concat(lower_frames), tol_scale)
    combined = _concat([upper_report.applicable_points, lower_report.applicable_points])
    report = VerificationReport(
        check_id, params, combined, tol_scale,
        sub_reports={"regime_upper": upper_report, "regime_lower": lower_report},
    )
    report.extras.update({
        "R": R,
        "points_upper": int(upper_report.mask.sum()),
        "points_lower": int(lower_report.mask.sum()),
    })
    if params.K > 0:
        report.notes.append(R_NOTE)
    logger.info("%s: R=%.6g, min margin %.3e (%d upper, %d lower points)",
                check_id.value, R, report.min_margin,
                report.extras["points_upper"], report.extras["points_lower"])
    return report


def family_margin(fields: HopfFields, y, params: BoundParams) -> np.ndarray:
    """
    Margin C(t, y) + dC/dy(t, y) (Y - y) - (X - Y) for scalar or pointwise y.

    With y = fields.Y this reproduces the upper regime of check_thm_b.
    """
    y = np.asarray(y, dtype=float)
    bound = capC(fields.t, y, params.N, params.R) + dC_dy(fields.t, y, params.N, params.R) * (fields.Y - y)
    return bound - (fields.X - fields.Y)


def check_family_bound(
    fields_list: Sequence[HopfFields],
    model: ManifoldModel,
    m: float,
    y_samples: Sequence[float],
    tol_scale: float = TOL_SCALE,
    support_cutoff: Optional[float] = None,
    R: Optional[float] = None,
) -> VerificationReport:
    """
    Family of linear bounds X - Y <= C(t, y) + dC/dy(t, y)(Y - y), one per y sample.

    Raises:
        CheckPreconditionError: If m <= 1, no samples are given, or a
            sample lies below -NR/4.
    """
    check_id = CheckId.FAMILY_BOUND
    _require_fields(check_id, fields_list)
    if not m > 1:
        raise CheckPreconditionError(check_id, f"needs m > 1, got m={m}")
    if len(y_samples) == 0:
        raise CheckPreconditionError(check_id, "needs at least one y sample")
    if R is None:
        R = curvature_scale(fields_list, model, support_cutoff)
    params = _params(check_id, m, model, R=R)

    subs: Dict[str, VerificationReport] = {}
    for y in y_samples:
        frames = []
        for fl in fields_list:
            try:
                margin = family_margin(fl, y, params)
            except BoundsRangeError as err:
                raise CheckPreconditionError(check_id, str(err)) from err
            quantity = fl.X - fl.Y
            bound = margin + quantity
            tol = _tolerance(bound, params.N, fl.t, tol_scale)
            frames.append(_rows(fl, bound, quantity, applicability_mask(fl, support_cutoff), tol,
                                check_id, f"y={y:.6g}"))
        subs[f"y={y:.6g}"] = VerificationReport(check_id, params, _concat(frames), tol_scale)

    combined = _concat([sub.applicable_points for sub in subs.values()])
    report = VerificationReport(check_id, params, combined, tol_scale, sub_reports=subs)
    report.extras["R"] = R
    if params.K > 0:
        report.notes.append(R_NOTE)
    logger.info("%s: %d y samples, min margin %.3e", check_id.value, len(subs), report.min_margin)
    return report


def check_aronson_benilan(
    fields_list: Sequence[HopfFields],
    model: ManifoldModel,
    m: float,
    tol_scale: float = TOL_SCALE,
    support_cutoff: Optional[float] = None,
) -> VerificationReport:
    """
    Classical estimate Z = -Lf <= N/(2t) on flat space.

    Raises:
        ModelNotFlatError: If K != 0.
    """
    check_id = CheckId.AB_CLASSICAL
    _require_fields(check_id, fields_list)
    _require_flat(check_id, model)
    params = _params(check_id, m, model)

    frames = []
    for fl in fields_list:
        bound = np.full(fl.r.shape, params.N / (2.0 * fl.t))
        tol = _tolerance(bound, params.N, fl.t, tol_scale)
        frames.append(_rows(fl, bound, fl.Z, applicability_mask(fl, support_cutoff), tol, check_id))

    report = VerificationReport(check_id, params, _concat(frames), tol_scale)
    logger.info("%s: min margin %.3e, passed=%s", check_id.value, report.min_margin, report.passed)
    return report


def check_li_yau(
    fields_list: Sequence[HopfFields],
    model: ManifoldModel,
    m: float = 1.0,
    tol_scale: float = TOL_SCALE,
    support_cutoff: Optional[float] = None,
) -> VerificationReport:
    """
    Heat-equation estimate |grad f|^2 - f_t <= n/(2t) with f = log u.

    Raises:
        CheckPreconditionError: If m != 1.
        ModelNotFlatError: If K != 0.
    """
    check_id = CheckId.LI_YAU_K0
    _require_fields(check_id, fields_list)
    if m != 1.0:
        raise CheckPreconditionError(check_id, f"needs m = 1, got m={m}")
    _require_flat(check_id, model)
    params = _params(check_id, m, model)

    frames = []
    for fl in fields_list:
        bound = np.full(fl.r.shape, model.n / (2.0 * fl.t))
        quantity = fl.gradf2 - fl.f_t
        tol = _tolerance(bound, params.N, fl.t, tol_scale)
        frames.append(_rows(fl, bound, quantity, applicability_mask(fl, support_cutoff), tol, check_id))

    report = VerificationReport(check_id, params, _concat(frames), tol_scale)
    logger.info("%s: min margin %.3e, passed=%s", check_id.value, report.min_margin, report.passed)
    return report


def check_cd(
    fields_list: Sequence[HopfFields],
    model: ManifoldModel,
    m: float,
    tol_scale: float = TOL_SCALE,
    support_cutoff: Optional[float] = None,
) -> VerificationReport:
    """
    Curvature-dimension inequality Gamma_2(f, f) - (Lf)^2/n + K |grad f|^2 >= 0.

    The bound column holds Gamma_2 + K |grad f|^2 and the compared
    quantity is (L_h f)^2/n. The tolerance scales with the largest of
    the three terms at each point.

    On the radial models Ric + K vanishes and the defect reduces to
    ((n-1)/n) (f_rr - (A'/A) f_r)^2, so the check cannot fail beyond
    roundoff for any derivative data. The report carries CD_NOTE.
    """
    check_id = CheckId.CD_CONDITION
    _require_fields(check_id, fields_list)
    params = _params(check_id, m, model)
    K = params.K

    frames = []
    for fl in fields_list:
        gamma2 = fl.gamma2()
        bound = gamma2 + K * fl.gradf2
        quantity = fl.lap_f**2 / model.n
        scale = np.maximum.reduce([np.abs(gamma2), quantity, K * fl.gradf2])
        frames.append(_rows(fl, bound, quantity, applicability_mask(fl, support_cutoff),
                            tol_scale * scale, check_id))

    report = VerificationReport(check_id, params, _concat(frames), tol_scale)
    report.notes.append(CD_NOTE)
    logger.info("%s: min margin %.3e, passed=%s", check_id.value, report.min_margin, report.passed)
    return report
