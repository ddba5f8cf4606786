"""
Configuration constants for the porous medium estimate laboratory.

This module contains the numerical defaults shared by the solver, the
bound evaluators and the verifier, plus the CLI's file and exit-code
conventions. Tolerances are absolute unless noted otherwise.
"""

from pathlib import Path

# =============================================================================
# SOLVER DEFAULTS
# Backward-Euler Newton iteration on the radial grid
# =============================================================================

NEWTON_TOL = 1e-10  # Max-norm residual, in units of u
MAX_NEWTON_ITERS = 50
MAX_DAMPING_HALVINGS = 10  # Step halvings allowed to keep an iterate positive
MIN_GRID_POINTS = 3

# =============================================================================
# SPECIAL FUNCTION GUARDS
# =============================================================================

# coth(x) switches to the Laurent series 1/x + x/3 below this argument
COTH_SERIES_THRESHOLD = 1e-4

# dC/dy switches to its Taylor series below this value of w
DCDY_SERIES_THRESHOLD = 1e-2

# coth(w/2) is taken as exactly 1 above this value of w
COTH_CLAMP = 60.0

# Tolerance when comparing y against the regime threshold -NR/4
RADICAND_SLACK = 1e-12

# =============================================================================
# VERIFICATION DEFAULTS
# =============================================================================

# Pointwise tolerance is TOL_SCALE * max(|bound|, N/(2t))
TOL_SCALE = 1e-3

# Cells dropped at each end of the grid before reporting derived fields
BOUNDARY_CELLS = 2

# Compact-support exact solutions: ignore points with u < SUPPORT_CUTOFF * max u
SUPPORT_CUTOFF = 0.05

# Saturation statistics are taken where u >= SATURATION_REGION * max u
SATURATION_REGION = 0.1

# Value substituted outside the support when sampling a Barenblatt profile
EXACT_FLOOR = 1e-12

# Default profile constant for self-similar solutions
DEFAULT_B0 = 1.0

# =============================================================================
# OUTPUT SETTINGS
# =============================================================================

CSV_FLOAT_FORMAT = "%.17g"

SUMMARY_FILENAME = "summary.json"
POINTS_FILENAME = "points.csv"
TRAJECTORY_FILENAME = "trajectory.csv"
BOUNDS_FILENAME = "bounds.csv"
CONVERGENCE_FILENAME = "convergence.csv"

DEFAULT_OUTPUT_DIR = Path("output")

# Builtin scenario files live next to the package
SCENARIO_DIR = Path(__file__).parent.parent.parent / "data" / "scenarios"

# =============================================================================
# EXIT CODES
# =============================================================================

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_ERROR = 3
