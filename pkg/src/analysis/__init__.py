"""
Analysis module: Hopf-transformed fields, bound functions and estimate checks.
"""

from src.analysis.hopf import (
    FieldMode,
    HopfFields,
    EvolutionResiduals,
    HopfError,
    NonPositiveInputError,
    NonPositiveSolutionError,
    SnapshotIndexError,
    hopf_transform,
    compute_fields,
    compute_all_fields,
    fields_from_derivatives,
    apply_A,
    evolution_residuals,
)
from src.analysis.bounds import (
    BoundParams,
    BoundsRangeError,
    n_effective,
    w_fn,
    capC,
    dC_dy,
    bigQ,
    riccati_residual,
    thm_a1_rhs,
    thm_a2_rhs,
    thm_a2_display_rhs,
    bound_table,
)
from src.analysis.verifier import (
    CheckId,
    VerificationReport,
    CheckPreconditionError,
    ModelNotFlatError,
    check_thm_a1,
    check_thm_a2,
    check_thm_b,
    check_family_bound,
    check_aronson_benilan,
    check_li_yau,
    check_cd,
    family_margin,
    thm_a1_lhs_direct,
    saturation_error,
)

__all__ = [
    "FieldMode",
    "HopfFields",
    "EvolutionResiduals",
    "HopfError",
    "NonPositiveInputError",
    "NonPositiveSolutionError",
    "SnapshotIndexError",
    "hopf_transform",
    "compute_fields",
    "compute_all_fields",
    "fields_from_derivatives",
    "apply_A",
    "evolution_residuals",
    "BoundParams",
    "BoundsRangeError",
    "n_effective",
    "w_fn",
    "capC",
    "dC_dy",
    "bigQ",
    "riccati_residual",
    "thm_a1_rhs",
    "thm_a2_rhs",
    "thm_a2_display_rhs",
    "bound_table",
    "CheckId",
    "VerificationReport",
    "CheckPreconditionError",
    "ModelNotFlatError",
    "check_thm_a1",
    "check_thm_a2",
    "check_thm_b",
    "check_family_bound",
    "check_aronson_benilan",
    "check_li_yau",
    "check_cd",
    "family_margin",
    "thm_a1_lhs_direct",
    "saturation_error",
]
