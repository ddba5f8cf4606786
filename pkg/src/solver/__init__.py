"""
Solver module: implicit radial porous medium solver and closed-form solutions.
"""

from src.solver.pme_solver import (
    RadialGrid,
    Scheme,
    BoundaryKind,
    BoundaryCondition,
    SolverConfig,
    SolutionTrajectory,
    SolverError,
    SolverConfigError,
    PositivityLossError,
    NewtonDivergenceError,
    face_weights,
    cell_volumes,
    divergence_operator,
    discrete_mass,
    step,
    solve,
    pde_residual,
)
from src.solver.exact_solutions import (
    ExactKind,
    ExactSolutionError,
    SelfSimilarParams,
    barenblatt,
    fast_diffusion_selfsimilar,
    gaussian_heat_kernel,
    gaussian_heat_kernel_derivatives,
    selfsimilar_derivatives,
    exact_profile,
    exact_derivatives,
    support_radius,
    unit_sphere_area,
    gaussian_mass,
    sample_trajectory,
)

__all__ = [
    "RadialGrid",
    "Scheme",
    "BoundaryKind",
    "BoundaryCondition",
    "SolverConfig",
    "SolutionTrajectory",
    "SolverError",
    "SolverConfigError",
    "PositivityLossError",
    "NewtonDivergenceError",
    "face_weights",
    "cell_volumes",
    "divergence_operator",
    "discrete_mass",
    "step",
    "solve",
    "pde_residual",
    "ExactKind",
    "ExactSolutionError",
    "SelfSimilarParams",
    "barenblatt",
    "fast_diffusion_selfsimilar",
    "gaussian_heat_kernel",
    "gaussian_heat_kernel_derivatives",
    "selfsimilar_derivatives",
    "exact_profile",
    "exact_derivatives",
    "support_radius",
    "unit_sphere_area",
    "gaussian_mass",
    "sample_trajectory",
]
