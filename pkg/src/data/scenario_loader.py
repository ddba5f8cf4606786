"""
Scenario Loader Module.

This module loads verification scenarios from YAML files, validates
their structure, converts values to the solver and verifier types, and
checks every requested check's parameter preconditions before anything
runs. See docs/specs/scenario-schema.md for the file format.

Example:
    >>> from src.data.scenario_loader import load_scenario
    >>> scenario = load_scenario("barenblatt-saturation")
    >>> scenario.model, scenario.m, [c.value for c in scenario.checks]
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import yaml

from src.analysis.bounds import BoundParams
from src.analysis.hopf import FieldMode
from src.analysis.verifier import CheckId
from src.geometry.manifold import GeometryError, ManifoldKind, ManifoldModel
from src.solver.exact_solutions import ExactKind
from src.solver.pme_solver import (
    BoundaryCondition,
    BoundaryKind,
    RadialGrid,
    Scheme,
    SolverConfig,
    SolverConfigError,
)
from src.utils.config import (
    BOUNDS_FILENAME,
    CONVERGENCE_FILENAME,
    MAX_NEWTON_ITERS,
    NEWTON_TOL,
    POINTS_FILENAME,
    SCENARIO_DIR,
    SUMMARY_FILENAME,
    SUPPORT_CUTOFF,
    TOL_SCALE,
    TRAJECTORY_FILENAME,
)

logger = logging.getLogger(__name__)

# Required top-level keys of a scenario file
REQUIRED_KEYS = [
    "manifold",
    "m",
    "grid",
    "time",
    "initial",
    "checks",
]

# Symbolic y sample accepted in family_y and bounds sweeps
REGIME_THRESHOLD_TOKEN = "-NR/4"

DEFAULT_OUTPUTS = {
    "summary": SUMMARY_FILENAME,
    "points": POINTS_FILENAME,
    "trajectory": TRAJECTORY_FILENAME,
    "bounds": BOUNDS_FILENAME,
    "convergence": CONVERGENCE_FILENAME,
}


class ScenarioValidationError(Exception):
    """Raised when a scenario file fails validation."""
    pass


class MissingKeysError(ScenarioValidationError):
    """Raised when required keys are missing from a scenario."""

    def __init__(self, missing_keys: List[str]):
        self.missing_keys = missing_keys
        msg = f"Missing required keys: {', '.join(missing_keys)}"
        super().__init__(msg)


class InvalidValueError(ScenarioValidationError):
    """Raised when a scenario value has the wrong type or range."""

    def __init__(self, key: str, expected: str, error_detail: str):
        self.key = key
        self.expected = expected
        msg = f"Key '{key}' should be {expected}: {error_detail}"
        super().__init__(msg)


class InitialKind(Enum):
    """Initial data families."""

    CONSTANT = "Constant"
    BUMP = "Bump"
    BARENBLATT = "Barenblatt"
    FAST_DIFFUSION = "FastDiffusionSS"
    GAUSSIAN = "Gaussian"

    @property
    def exact_kind(self) -> Optional[ExactKind]:
        return {
            InitialKind.BARENBLATT: ExactKind.BARENBLATT,
            InitialKind.FAST_DIFFUSION: ExactKind.FAST_DIFFUSION,
            InitialKind.GAUSSIAN: ExactKind.GAUSSIAN,
        }.get(self)


@dataclass(frozen=True)
class Scenario:
    """
    A validated scenario.

    Attributes mirror the YAML keys; `initial_params` keeps the raw
    parameters of the initial-data family.
    """

    name: str
    model: ManifoldModel
    m: float
    grid: RadialGrid
    t0: float
    t1: float
    dt: float
    initial_kind: InitialKind
    initial_params: Dict[str, float] = field(default_factory=dict)
    boundary: BoundaryCondition = field(default_factory=BoundaryCondition.neumann)
    scheme: Scheme = Scheme.IMPLICIT_NEWTON
    source: str = "solver"
    field_mode: Optional[FieldMode] = None
    checks: List[CheckId] = field(default_factory=list)
    tol_scale: float = TOL_SCALE
    support_cutoff: Optional[float] = None
    newton_tol: float = NEWTON_TOL
    max_newton_iters: int = MAX_NEWTON_ITERS
    region_fraction: Optional[float] = None
    family_y: List[Union[float, str]] = field(default_factory=list)
    bounds_sweep: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=lambda: dict(DEFAULT_OUTPUTS))
    description: str = ""

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            dt=self.dt, t0=self.t0, t1=self.t1, scheme=self.scheme,
            newton_tol=self.newton_tol, max_newton_iters=self.max_newton_iters,
            outer_bc=self.boundary,
        )

    def snapshot_times(self) -> np.ndarray:
        """Snapshot times t0, t0 + dt, ..., t1 (dt shrunk to land on t1)."""
        steps = max(1, int(np.ceil((self.t1 - self.t0) / self.dt - 1e-9)))
        return np.linspace(self.t0, self.t1, steps + 1)

    def refined(self, level: int) -> "Scenario":
        """Copy with h and dt halved `level` times."""
        factor = 2**level
        return replace(
            self,
            grid=RadialGrid(self.grid.r_max, self.grid.cells * factor),
            dt=self.dt / factor,
        )

    def with_tol_scale(self, tol_scale: float) -> "Scenario":
        return replace(self, tol_scale=tol_scale)

    def resolve_y(self, value: Union[float, str], params: BoundParams) -> float:
        """Numeric value of a y sample, expanding the '-NR/4' token."""
        if isinstance(value, str):
            return params.regime_threshold
        return float(value)


def validate_keys(raw: dict) -> None:
    """
    Validate that all required top-level keys are present.

    Raises:
        MissingKeysError: If any required key is missing.
    """
    missing = [key for key in REQUIRED_KEYS if key not in raw]
    if missing:
        raise MissingKeysError(missing)


def _number(section: dict, key: str, prefix: str, cast=float, default=None):
    if key not in section:
        if default is not None:
            return default
        raise MissingKeysError([f"{prefix}{key}"])
    try:
        return cast(section[key])
    except (TypeError, ValueError) as e:
        raise InvalidValueError(f"{prefix}{key}", cast.__name__, str(e))


def _section(raw: dict, key: str) -> dict:
    section = raw.get(key) or {}
    if not isinstance(section, dict):
        raise InvalidValueError(key, "a mapping", f"got {type(section).__name__}")
    return section


def _enum(enum_cls, value, key: str):
    try:
        return enum_cls(value)
    except ValueError:
        choices = ", ".join(e.value for e in enum_cls)
        raise InvalidValueError(key, f"one of {choices}", f"got {value!r}")


def _y_sample(value) -> Union[float, str]:
    if isinstance(value, str) and value.replace(" ", "") == REGIME_THRESHOLD_TOKEN:
        return REGIME_THRESHOLD_TOKEN
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise InvalidValueError("family_y", f"a number or '{REGIME_THRESHOLD_TOKEN}'", str(e))


def convert_scenario(raw: dict, name: str = "scenario") -> Scenario:
    """
    Convert a raw scenario mapping into a Scenario.

    Raises:
        MissingKeysError: If a nested required key is missing.
        InvalidValueError: If a value cannot be converted.
    """
    validate_keys(raw)

    manifold = _section(raw, "manifold")
    kind = _enum(ManifoldKind, manifold.get("kind", "Euclidean"), "manifold.kind")
    try:
        model = ManifoldModel(
            kind,
            _number(manifold, "n", "manifold.", int),
            _number(manifold, "kappa", "manifold.", float, 0.0),
        )
    except GeometryError as e:
        raise InvalidValueError("manifold", "a valid model manifold", str(e))

    m = _number(raw, "m", "")
    grid_section = _section(raw, "grid")
    time_section = _section(raw, "time")
    try:
        grid = RadialGrid(_number(grid_section, "r_max", "grid."), _number(grid_section, "cells", "grid.", int))
    except SolverConfigError as e:
        raise InvalidValueError("grid", "a valid radial grid", str(e))

    initial = _section(raw, "initial")
    initial_kind = _enum(InitialKind, initial.get("kind"), "initial.kind")
    initial_params = {k: float(v) for k, v in (initial.get("params") or {}).items()}

    boundary_section = _section(raw, "boundary")
    boundary_kind = _enum(BoundaryKind, boundary_section.get("kind", "NeumannZero"), "boundary.kind")
    try:
        value = boundary_section.get("value")
        boundary = BoundaryCondition(boundary_kind, None if value is None else float(value))
    except SolverConfigError as e:
        raise InvalidValueError("boundary", "a valid boundary condition", str(e))

    checks_raw = raw.get("checks") or []
    if not isinstance(checks_raw, list):
        raise InvalidValueError("checks", "a list of check ids", f"got {type(checks_raw).__name__}")
    checks = [_enum(CheckId, c, "checks") for c in checks_raw]

    tolerances = _section(raw, "tolerances")
    cutoff = tolerances.get("support_cutoff")
    if cutoff is None and initial_kind == InitialKind.BARENBLATT:
        cutoff = SUPPORT_CUTOFF
    region = tolerances.get("region_fraction")

    field_mode = raw.get("field_mode")
    outputs = dict(DEFAULT_OUTPUTS)
    outputs.update({k: str(v) for k, v in _section(raw, "output").items()})

    return Scenario(
        name=str(raw.get("name", name)),
        description=str(raw.get("description", "")),
        model=model,
        m=m,
        grid=grid,
        t0=_number(time_section, "t0", "time."),
        t1=_number(time_section, "t1", "time."),
        dt=_number(time_section, "dt", "time."),
        initial_kind=initial_kind,
        initial_params=initial_params,
        boundary=boundary,
        scheme=_enum(Scheme, raw.get("scheme", Scheme.IMPLICIT_NEWTON.value), "scheme"),
        source=str(raw.get("source", "solver")),
        field_mode=None if field_mode is None else _enum(FieldMode, field_mode, "field_mode"),
        checks=checks,
        tol_scale=_number(tolerances, "tol_scale", "tolerances.", float, TOL_SCALE),
        support_cutoff=None if cutoff is None else float(cutoff),
        newton_tol=_number(tolerances, "newton_tol", "tolerances.", float, NEWTON_TOL),
        max_newton_iters=_number(tolerances, "max_newton_iters", "tolerances.", int, MAX_NEWTON_ITERS),
        region_fraction=None if region is None else float(region),
        family_y=[_y_sample(y) for y in raw.get("family_y") or []],
        bounds_sweep=_section(raw, "bounds_sweep"),
        outputs=outputs,
    )


def validate_check_preconditions(scenario: Scenario) -> None:
    """
    Check each requested check's parameter range before running.

    Raises:
        InvalidValueError: On the first violated precondition.
    """
    m, n, K = scenario.m, scenario.model.n, scenario.model.cd_constant()
    for check in scenario.checks:
        if check == CheckId.THM_A1 and not (0.5 < m < 1.0 and m > 1.0 - 2.0 / n):
            raise InvalidValueError("m", f"in (max(1/2, 1-2/n), 1) for {check.value}", f"got m={m}, n={n}")
        if check in (CheckId.THM_B, CheckId.FAMILY_BOUND) and not m > 1:
            raise InvalidValueError("m", f"> 1 for {check.value}", f"got m={m}")
        if check in (CheckId.THM_A2, CheckId.AB_CLASSICAL, CheckId.LI_YAU_K0) and K != 0:
            raise InvalidValueError("manifold", f"flat (K = 0) for {check.value}", f"got K={K}")
        if check == CheckId.LI_YAU_K0 and m != 1:
            raise InvalidValueError("m", f"= 1 for {check.value}", f"got m={m}")
        if check == CheckId.FAMILY_BOUND and not scenario.family_y:
            raise InvalidValueError("family_y", f"non-empty for {check.value}", "no y samples given")


def validate_scenario_ranges(scenario: Scenario, strict: bool = False) -> List[str]:
    """
    Validate numerical ranges of a converted scenario.

    Hard violations raise InvalidValueError; soft issues are returned as
    warnings (or raised together when strict=True).

    Raises:
        InvalidValueError: On invalid exponent, time window, source or tolerance.
        ScenarioValidationError: If strict=True and warnings exist.
    """
    m, n = scenario.m, scenario.model.n
    if not m > 0:
        raise InvalidValueError("m", "> 0", f"got {m}")
    if not n * (m - 1.0) + 2.0 > 0:
        raise InvalidValueError("m", "> 1 - 2/n", f"got m={m}, n={n}")
    try:
        scenario.solver_config()
    except SolverConfigError as e:
        raise InvalidValueError("time", "a valid time window", str(e))
    if not scenario.tol_scale > 0:
        raise InvalidValueError("tolerances.tol_scale", "> 0", f"got {scenario.tol_scale}")
    if scenario.source not in ("solver", "exact"):
        raise InvalidValueError("source", "'solver' or 'exact'", f"got {scenario.source!r}")

    exact = scenario.initial_kind.exact_kind
    if scenario.source == "exact":
        if exact is None:
            raise InvalidValueError("source", f"'solver' for {scenario.initial_kind.value} data",
                                    "no closed form available")
        if not scenario.model.is_flat:
            raise InvalidValueError("manifold", "Euclidean for closed-form sources", f"got {scenario.model.kind.value}")
    if exact == ExactKind.BARENBLATT and not m > 1:
        raise InvalidValueError("m", "> 1 for Barenblatt data", f"got {m}")
    if exact == ExactKind.FAST_DIFFUSION and not m < 1:
        raise InvalidValueError("m", "< 1 for FastDiffusionSS data", f"got {m}")
    if exact == ExactKind.GAUSSIAN and m != 1:
        raise InvalidValueError("m", "= 1 for Gaussian data", f"got {m}")
    if scenario.initial_kind in (InitialKind.CONSTANT, InitialKind.BUMP):
        floor = scenario.initial_params.get("value", scenario.initial_params.get("floor", 0.0))
        if not floor > 0:
            raise InvalidValueError("initial.params", "a positive value or floor", f"got {floor}")

    warnings = []
    if scenario.grid.cells < 32:
        warnings.append(f"Grid has only {scenario.grid.cells} cells; derived fields will be coarse")
    if scenario.snapshot_times().size < 5:
        warnings.append("Fewer than 5 snapshots; temporal differences leave few usable times")
    if scenario.source == "solver" and scenario.initial_kind == InitialKind.BARENBLATT \
            and not scenario.boundary.is_dirichlet:
        warnings.append("Barenblatt data in the solver is usually paired with a Dirichlet floor")
    if scenario.source == "exact" and scenario.scheme != Scheme.IMPLICIT_NEWTON:
        warnings.append("scheme is ignored for closed-form sources")

    if strict and warnings:
        raise ScenarioValidationError("Scenario validation warnings:\n" + "\n".join(warnings))
    return warnings


def list_builtin_scenarios() -> List[str]:
    """Names of the scenarios shipped in data/scenarios."""
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.yaml"))


def resolve_scenario_path(path_or_name: Union[str, Path]) -> Path:
    """
    Resolve a file path or a builtin scenario name.

    Raises:
        FileNotFoundError: If neither a file nor a builtin matches.
    """
    path = Path(path_or_name)
    if path.exists():
        return path
    builtin = SCENARIO_DIR / f"{path_or_name}.yaml"
    if builtin.exists():
        return builtin
    raise FileNotFoundError(
        f"Scenario not found: {path_or_name} (builtins: {', '.join(list_builtin_scenarios())})"
    )


def load_scenario(path_or_name: Union[str, Path], strict: bool = False) -> Scenario:
    """
    Load and fully validate a scenario.

    Args:
        path_or_name: YAML file path or builtin scenario name.
        strict: If True, raise on range warnings. Default False.

    Returns:
        Validated Scenario.

    Raises:
        FileNotFoundError: If the scenario cannot be found.
        ScenarioValidationError: If parsing or validation fails.

    Example:
        >>> scenario = load_scenario("constant-trivial")
        >>> scenario.initial_kind
        <InitialKind.CONSTANT: 'Constant'>
    """
    path = resolve_scenario_path(path_or_name)
    if path.suffix.lower() not in (".yaml", ".yml"):
        raise ScenarioValidationError(f"Expected a YAML scenario file, got: {path.suffix}")

    try:
        with open(path, "r") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ScenarioValidationError(f"Failed to parse scenario file: {e}")
    if not isinstance(raw, dict):
        raise ScenarioValidationError("Scenario file must contain a mapping at the top level")

    scenario = convert_scenario(raw, name=path.stem)
    warnings = validate_scenario_ranges(scenario, strict=strict)
    for warning in warnings:
        logger.warning("%s: %s", scenario.name, warning)
    validate_check_preconditions(scenario)
    logger.info("Loaded scenario %s from %s", scenario.name, path)
    return scenario


def load_scenario_dict(raw: dict, strict: bool = False) -> Scenario:
    """Validate an in-memory scenario mapping the same way load_scenario does."""
    scenario = convert_scenario(raw)
    for warning in validate_scenario_ranges(scenario, strict=strict):
        logger.warning("%s: %s", scenario.name, warning)
    validate_check_preconditions(scenario)
    return scenario
