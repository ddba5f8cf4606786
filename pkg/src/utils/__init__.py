"""
Utilities module for the porous medium estimate laboratory.

This module provides configuration constants and numerical helpers.
"""

from src.utils.config import (
    # Solver defaults
    NEWTON_TOL,
    MAX_NEWTON_ITERS,
    MAX_DAMPING_HALVINGS,
    MIN_GRID_POINTS,
    # Special function guards
    COTH_SERIES_THRESHOLD,
    DCDY_SERIES_THRESHOLD,
    COTH_CLAMP,
    # Verification defaults
    TOL_SCALE,
    BOUNDARY_CELLS,
    SUPPORT_CUTOFF,
    SATURATION_REGION,
    EXACT_FLOOR,
    # Output
    CSV_FLOAT_FORMAT,
    SCENARIO_DIR,
)
from src.utils.numerics import stable_coth, observed_orders

__all__ = [
    "NEWTON_TOL",
    "MAX_NEWTON_ITERS",
    "MAX_DAMPING_HALVINGS",
    "MIN_GRID_POINTS",
    "COTH_SERIES_THRESHOLD",
    "DCDY_SERIES_THRESHOLD",
    "COTH_CLAMP",
    "TOL_SCALE",
    "BOUNDARY_CELLS",
    "SUPPORT_CUTOFF",
    "SATURATION_REGION",
    "EXACT_FLOOR",
    "CSV_FLOAT_FORMAT",
    "SCENARIO_DIR",
    "stable_coth",
    "observed_orders",
]
