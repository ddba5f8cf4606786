"""
Geometry module: rotationally symmetric model manifolds and radial operators.
"""

from src.geometry.manifold import (
    ManifoldKind,
    ManifoldModel,
    GeometryError,
    GridTooCoarseError,
    drift_coefficient,
    radial_derivatives,
    radial_laplacian,
    laplacian_from_derivatives,
    gamma2_radial,
    gamma2_from_derivatives,
    cd_defect,
    cd_defect_from_derivatives,
)

__all__ = [
    "ManifoldKind",
    "ManifoldModel",
    "GeometryError",
    "GridTooCoarseError",
    "drift_coefficient",
    "radial_derivatives",
    "radial_laplacian",
    "laplacian_from_derivatives",
    "gamma2_radial",
    "gamma2_from_derivatives",
    "cd_defect",
    "cd_defect_from_derivatives",
]
