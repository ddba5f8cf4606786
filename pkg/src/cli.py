"""
Command-line front end.

Usage:
    python -m src.cli verify --scenario barenblatt-saturation --out output/bb
    python -m src.cli solve --scenario hyperbolic-pme
    python -m src.cli exact --scenario gaussian-li-yau
    python -m src.cli bounds --scenario hyperbolic-pme
    python -m src.cli convergence --scenario gaussian-li-yau --levels 3

Exit codes: 0 success, 1 a check failed, 2 configuration error,
3 solver or field failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from src.analysis.bounds import BoundParams, BoundsRangeError, bound_table, riccati_residual
from src.analysis.hopf import HopfError, compute_all_fields
from src.analysis.verifier import CheckPreconditionError, saturation_error
from src.data.report_writer import ReportWriter, ReportWriteError
from src.data.scenario_loader import Scenario, ScenarioValidationError, load_scenario
from src.geometry.manifold import GeometryError
from src.runner import build_trajectory, exact_variant, run_convergence, run_scenario
from src.solver.exact_solutions import ExactSolutionError
from src.solver.pme_solver import SolverConfigError, SolverError, discrete_mass, pde_residual
from src.utils.config import (
    DEFAULT_OUTPUT_DIR,
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_SOLVER_ERROR,
    SATURATION_REGION,
)

logger = logging.getLogger(__name__)

CONFIG_ERRORS = (
    ScenarioValidationError,
    CheckPreconditionError,
    BoundsRangeError,
    GeometryError,
    ExactSolutionError,
    SolverConfigError,
    FileNotFoundError,
)
RUN_ERRORS = (SolverError, HopfError)


def _configure_logging(level_name: str) -> None:
    """Configure root logging for a CLI run."""
    level = getattr(logging, level_name.upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)
    logging.captureWarnings(True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pme-lab",
        description="Solve porous medium / fast diffusion scenarios and verify gradient estimates.",
    )
    parser.add_argument("--log-level", default="INFO", help="Logging level (default: INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("solve", "Run the implicit solver and write the trajectory"),
        ("exact", "Sample the scenario's closed-form solution"),
        ("verify", "Run every check of the scenario"),
        ("bounds", "Tabulate the bound functions over the scenario's sweep"),
        ("convergence", "Repeat the scenario under grid and time-step refinement"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--scenario", required=True, help="Scenario YAML path or builtin name")
        cmd.add_argument("--out", type=Path, default=None,
                         help=f"Output directory (default: {DEFAULT_OUTPUT_DIR}/<scenario>)")
        cmd.add_argument("--tol-scale", type=float, default=None, help="Override tolerances.tol_scale")
        cmd.add_argument("--strict", action="store_true", help="Treat scenario warnings as errors")
        if name == "convergence":
            cmd.add_argument("--levels", type=int, default=3, help="Refinement levels (default: 3)")
    return parser


def _writer(scenario: Scenario, out: Optional[Path]) -> ReportWriter:
    return ReportWriter(out if out is not None else DEFAULT_OUTPUT_DIR / scenario.name)


def cmd_solve(scenario: Scenario, writer: ReportWriter) -> int:
    traj = build_trajectory(scenario)
    writer.write_table(traj.to_frame(), scenario.outputs["trajectory"])
    masses = [discrete_mass(u, scenario.model, scenario.grid) for u in traj.values]
    writer.write_summary({
        "scenario": scenario.name,
        "source": traj.source,
        "snapshots": traj.n_snapshots,
        "t_final": float(traj.times[-1]),
        "u_min": float(traj.values.min()),
        "u_max": float(traj.values.max()),
        "mass_initial": masses[0],
        "mass_final": masses[-1],
        "pde_residual": pde_residual(traj) if traj.n_snapshots >= 3 else None,
    }, scenario.outputs["summary"])
    return EXIT_OK


def cmd_exact(scenario: Scenario, writer: ReportWriter) -> int:
    if scenario.initial_kind.exact_kind is None:
        raise ScenarioValidationError(f"{scenario.initial_kind.value} data has no closed form")
    scenario = exact_variant(scenario)
    traj = build_trajectory(scenario)
    fields_list = compute_all_fields(traj)
    N = BoundParams.from_model(scenario.m, scenario.model).N
    writer.write_table(traj.to_frame(), scenario.outputs["trajectory"])
    writer.write_summary({
        "scenario": scenario.name,
        "kind": scenario.initial_kind.value,
        "N": N,
        "saturation_error": saturation_error(fields_list, N, SATURATION_REGION),
        "pde_residual": pde_residual(traj, scenario.region_fraction or scenario.support_cutoff),
    }, scenario.outputs["summary"])
    return EXIT_OK


def cmd_verify(scenario: Scenario, writer: ReportWriter) -> int:
    result = run_scenario(scenario)
    writer.write_summary(result.summary(), scenario.outputs["summary"])
    writer.write_table(result.points(), scenario.outputs["points"])
    for report in result.reports:
        status = "PASS" if report.passed else "FAIL"
        logger.info("%-13s %s min_margin=%.3e", report.check_id.value, status, report.min_margin)
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def cmd_bounds(scenario: Scenario, writer: ReportWriter) -> int:
    sweep = scenario.bounds_sweep
    R = float(sweep.get("R", 0.0))
    params = BoundParams.from_model(scenario.m, scenario.model, R=R)
    times = sweep.get("times") or list(scenario.snapshot_times())
    ys = [scenario.resolve_y(y, params) if isinstance(y, str) else float(y) for y in sweep.get("ys", [0.0])]
    table = bound_table(times, ys, params.N, params.R)
    writer.write_table(table, scenario.outputs["bounds"])
    t_grid = np.linspace(min(times), max(times), 200)
    writer.write_summary({
        "scenario": scenario.name,
        "params": params.as_dict(),
        "riccati_residual": {f"y={y:.6g}": riccati_residual(t_grid, y, params.N, params.R) for y in ys},
    }, scenario.outputs["summary"])
    return EXIT_OK


def cmd_convergence(scenario: Scenario, writer: ReportWriter, levels: int) -> int:
    table = run_convergence(scenario, levels)
    writer.write_table(table, scenario.outputs["convergence"])
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.log_level)

    try:
        scenario = load_scenario(args.scenario, strict=args.strict)
        if args.tol_scale is not None:
            if not args.tol_scale > 0:
                raise ScenarioValidationError(f"--tol-scale must be > 0, got {args.tol_scale}")
            scenario = scenario.with_tol_scale(args.tol_scale)
        writer = _writer(scenario, args.out)

        if args.command == "solve":
            code = cmd_solve(scenario, writer)
        elif args.command == "exact":
            code = cmd_exact(scenario, writer)
        elif args.command == "verify":
            code = cmd_verify(scenario, writer)
        elif args.command == "bounds":
            code = cmd_bounds(scenario, writer)
        else:
            if args.levels < 2:
                raise ScenarioValidationError(f"--levels must be >= 2, got {args.levels}")
            code = cmd_convergence(scenario, writer, args.levels)
    except CONFIG_ERRORS as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG_ERROR
    except RUN_ERRORS as e:
        logger.error("Run failed: %s", e)
        return EXIT_SOLVER_ERROR
    except ReportWriteError as e:
        logger.error("%s", e)
        return EXIT_CONFIG_ERROR

    print(f"{args.command} {scenario.name}: {'ok' if code == EXIT_OK else 'checks failed'} -> {writer.out_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
