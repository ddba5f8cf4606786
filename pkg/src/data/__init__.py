"""
Data module for scenario loading and report writing.
"""

from src.data.scenario_loader import (
    Scenario,
    InitialKind,
    ScenarioValidationError,
    MissingKeysError,
    InvalidValueError,
    REQUIRED_KEYS,
    load_scenario,
    load_scenario_dict,
    convert_scenario,
    validate_keys,
    validate_scenario_ranges,
    validate_check_preconditions,
    list_builtin_scenarios,
    resolve_scenario_path,
)
from src.data.report_writer import ReportWriter, ReportWriteError, to_jsonable

__all__ = [
    "Scenario",
    "InitialKind",
    "ScenarioValidationError",
    "MissingKeysError",
    "InvalidValueError",
    "REQUIRED_KEYS",
    "load_scenario",
    "load_scenario_dict",
    "convert_scenario",
    "validate_keys",
    "validate_scenario_ranges",
    "validate_check_preconditions",
    "list_builtin_scenarios",
    "resolve_scenario_path",
    "ReportWriter",
    "ReportWriteError",
    "to_jsonable",
]
