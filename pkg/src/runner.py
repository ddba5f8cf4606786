"""
Scenario Pipelines.

This module turns a validated Scenario into results: it builds the
solution trajectory (solver run or closed-form sampling), computes the
Hopf fields, runs every requested check, and collects residual
diagnostics. run_convergence repeats a scenario with h and dt halved per
level and reports observed orders.

Example:
    >>> from src.data import load_scenario
    >>> from src.runner import run_scenario
    >>> result = run_scenario(load_scenario("barenblatt-saturation"))
    >>> result.passed
    True
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from src.analysis.bounds import BoundParams
from src.analysis.hopf import (
    FieldMode,
    HopfFields,
    compute_all_fields,
    default_mode,
    evolution_residuals,
)
from src.analysis.verifier import (
    CheckId,
    VerificationReport,
    check_aronson_benilan,
    check_cd,
    check_family_bound,
    check_li_yau,
    check_thm_a1,
    check_thm_a2,
    check_thm_b,
    curvature_scale,
    saturation_error,
)
from src.data.scenario_loader import InitialKind, Scenario
from src.solver.exact_solutions import SelfSimilarParams, exact_profile, sample_trajectory
from src.solver.pme_solver import SolutionTrajectory, discrete_mass, pde_residual, solve
from src.utils.config import DEFAULT_B0, EXACT_FLOOR, SATURATION_REGION
from src.utils.numerics import observed_orders

logger = logging.getLogger(__name__)


@dataclass
class ScenarioResult:
    """Everything produced by one scenario run."""

    scenario: Scenario
    trajectory: SolutionTrajectory
    reports: List[VerificationReport] = field(default_factory=list)
    diagnostics: Dict[str, Optional[float]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(report.passed for report in self.reports)

    def points(self) -> pd.DataFrame:
        """Per-point rows of every report, tagged by check id and regime."""
        frames = [report.points for report in self.reports]
        if not frames:
            return pd.DataFrame()
        return pd.concat(frames, ignore_index=True)

    def summary(self) -> dict:
        sc = self.scenario
        return {
            "scenario": sc.name,
            "source": self.trajectory.source,
            "manifold": sc.model.describe(),
            "m": sc.m,
            "grid": {"r_max": sc.grid.r_max, "cells": sc.grid.cells, "h": sc.grid.h},
            "time": {"t0": sc.t0, "t1": sc.t1, "dt": sc.dt, "snapshots": self.trajectory.n_snapshots},
            "tol_scale": sc.tol_scale,
            "passed": self.passed,
            "diagnostics": dict(self.diagnostics),
            "checks": [report.summary() for report in self.reports],
        }


# =============================================================================
# Trajectories
# =============================================================================

def _selfsimilar_params(scenario: Scenario) -> SelfSimilarParams:
    b0 = scenario.initial_params.get("b0", DEFAULT_B0)
    return SelfSimilarParams(scenario.model.n, scenario.m, b0)


def initial_profile(scenario: Scenario) -> np.ndarray:
    """
    Initial cell values at t0 for a solver run.

    Constant: value. Bump: floor + amplitude exp(-(r/width)^2).
    Closed forms: the exact profile at t0, raised to `floor` (default: the
    Dirichlet value, else EXACT_FLOOR).
    """
    r = scenario.grid.nodes
    params = scenario.initial_params
    kind = scenario.initial_kind
    if kind == InitialKind.CONSTANT:
        return np.full(r.shape, params.get("value", 1.0))
    if kind == InitialKind.BUMP:
        floor = params.get("floor", 0.1)
        return floor + params.get("amplitude", 1.0) * np.exp(-((r / params.get("width", 1.0)) ** 2))

    default_floor = scenario.boundary.value if scenario.boundary.is_dirichlet else EXACT_FLOOR
    floor = params.get("floor", default_floor)
    u0 = exact_profile(kind.exact_kind, _selfsimilar_params(scenario), scenario.t0, r)
    return np.maximum(u0, floor)


def _sampling_floor(scenario: Scenario) -> float:
    # Only the Barenblatt profile vanishes; other closed forms keep their far tails
    if scenario.initial_kind == InitialKind.BARENBLATT:
        return EXACT_FLOOR
    return float(np.finfo(float).tiny)


def build_trajectory(scenario: Scenario) -> SolutionTrajectory:
    """Solve the scenario, or sample its closed form when source is 'exact'."""
    times = scenario.snapshot_times()
    if scenario.source == "exact":
        logger.info("Sampling %s on %d cells at %d times",
                    scenario.initial_kind.value, scenario.grid.cells, times.size)
        return sample_trajectory(
            scenario.initial_kind.exact_kind, _selfsimilar_params(scenario), scenario.grid, times,
            floor=scenario.initial_params.get("floor", _sampling_floor(scenario)),
        )
    return solve(initial_profile(scenario), scenario.solver_config(), scenario.m,
                 scenario.model, scenario.grid)


# =============================================================================
# Checks
# =============================================================================

def _family_samples(scenario: Scenario, fields_list: List[HopfFields]) -> List[float]:
    R = curvature_scale(fields_list, scenario.model, scenario.support_cutoff)
    params = BoundParams.from_model(scenario.m, scenario.model, R=R)
    return [scenario.resolve_y(y, params) for y in scenario.family_y]


def run_checks(scenario: Scenario, fields_list: List[HopfFields]) -> List[VerificationReport]:
    """Run every check listed in the scenario on the given fields."""
    model, m = scenario.model, scenario.m
    common = {"tol_scale": scenario.tol_scale, "support_cutoff": scenario.support_cutoff}
    dispatch: Dict[CheckId, Callable[[], VerificationReport]] = {
        CheckId.THM_A1: lambda: check_thm_a1(fields_list, model, m, **common),
        CheckId.THM_A2: lambda: check_thm_a2(fields_list, model, m, **common),
        CheckId.THM_B: lambda: check_thm_b(fields_list, model, m, **common),
        CheckId.FAMILY_BOUND: lambda: check_family_bound(
            fields_list, model, m, _family_samples(scenario, fields_list), **common
        ),
        CheckId.AB_CLASSICAL: lambda: check_aronson_benilan(fields_list, model, m, **common),
        CheckId.LI_YAU_K0: lambda: check_li_yau(fields_list, model, m, **common),
        CheckId.CD_CONDITION: lambda: check_cd(fields_list, model, m, **common),
    }
    return [dispatch[check]() for check in scenario.checks]


def _residual_region(scenario: Scenario) -> Optional[float]:
    if scenario.region_fraction is not None:
        return scenario.region_fraction
    return scenario.support_cutoff


def _middle_index(traj: SolutionTrajectory, mode: FieldMode) -> Optional[int]:
    low = 2 if mode == FieldMode.TEMPORAL_DIFFERENCE else 1
    last = traj.n_snapshots - 1
    if last - low < low:
        return None
    return int(np.clip(last // 2, low, last - low))


def diagnostics(
    scenario: Scenario,
    traj: SolutionTrajectory,
    fields_list: List[HopfFields],
    mode: FieldMode,
    k: Optional[int] = None,
) -> Dict[str, Optional[float]]:
    """PDE residual, evolution residuals at snapshot k, saturation error and mass drift."""
    region = _residual_region(scenario)
    result: Dict[str, Optional[float]] = {
        "pde_residual": pde_residual(traj, region) if traj.n_snapshots >= 3 else None,
        "mass_drift": None,
    }

    k = _middle_index(traj, mode) if k is None else k
    if k is not None:
        res = evolution_residuals(traj, k, scenario.model, mode, region_fraction=region)
        result.update({f"evolution_{key}": value for key, value in res.as_dict().items()})

    if scenario.initial_kind.exact_kind is not None and scenario.model.is_flat:
        N = BoundParams.from_model(scenario.m, scenario.model).N
        result["saturation_error"] = saturation_error(fields_list, N, SATURATION_REGION)

    if traj.source == "solver" and not scenario.boundary.is_dirichlet:
        masses = [discrete_mass(u, scenario.model, scenario.grid) for u in traj.values]
        result["mass_drift"] = float(np.max(np.abs(np.diff(masses)))) / max(abs(masses[0]), 1e-300)
    return result


def run_scenario(scenario: Scenario, mode: Optional[FieldMode] = None) -> ScenarioResult:
    """
    Build the trajectory, run the checks and collect diagnostics.

    Args:
        scenario: Validated scenario.
        mode: Field mode override; defaults to the scenario's field_mode,
            then to the trajectory source's default.

    Returns:
        ScenarioResult with one report per requested check.
    """
    traj = build_trajectory(scenario)
    mode = mode or scenario.field_mode or default_mode(traj)
    fields_list = compute_all_fields(traj, mode)
    reports = run_checks(scenario, fields_list)
    result = ScenarioResult(scenario, traj, reports, diagnostics(scenario, traj, fields_list, mode))
    logger.info("Scenario %s: %d checks, passed=%s", scenario.name, len(reports), result.passed)
    return result


# =============================================================================
# Convergence
# =============================================================================

ORDER_COLUMNS = ["pde_residual", "evolution_res_U", "evolution_res_Y", "evolution_res_Z", "saturation_error"]


def run_convergence(scenario: Scenario, levels: int = 3) -> pd.DataFrame:
    """
    Repeat a scenario with h and dt halved per level.

    Evolution residuals are taken at the same physical time on every
    level (the middle snapshot of the coarsest level).

    Args:
        scenario: Validated scenario (level 0).
        levels: Number of levels (>= 2).

    Returns:
        DataFrame with one row per level: level, cells, h, dt, the
        diagnostics, min_margin_<check> per check, and order_<column>
        (observed order against the previous level; NaN on level 0).
    """
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")

    rows = []
    t_fixed: Optional[float] = None
    for level in range(levels):
        sc = scenario.refined(level)
        traj = build_trajectory(sc)
        mode = sc.field_mode or default_mode(traj)
        fields_list = compute_all_fields(traj, mode)
        if t_fixed is None:
            k0 = _middle_index(traj, mode)
            t_fixed = None if k0 is None else float(traj.times[k0])
        k = None if t_fixed is None else int(np.argmin(np.abs(traj.times - t_fixed)))

        row: Dict[str, Optional[float]] = {"level": level, "cells": sc.grid.cells, "h": sc.grid.h, "dt": sc.dt}
        row.update(diagnostics(sc, traj, fields_list, mode, k))
        for report in run_checks(sc, fields_list):
            row[f"min_margin_{report.check_id.value}"] = report.min_margin
        rows.append(row)
        logger.info("Convergence level %d: %d cells, dt=%.3g", level, sc.grid.cells, sc.dt)

    table = pd.DataFrame(rows)
    for column in ORDER_COLUMNS:
        if column in table:
            values = pd.to_numeric(table[column], errors="coerce").to_numpy(dtype=float)
            table[f"order_{column}"] = np.concatenate([[np.nan], observed_orders(values)])
    return table


def exact_variant(scenario: Scenario) -> Scenario:
    """The same scenario sampled from its closed form."""
    return replace(scenario, source="exact")
