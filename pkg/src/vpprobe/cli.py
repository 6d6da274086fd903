"""
Command-line interface of the Langmuir-probe Vlasov-Poisson solver.

Single solves, probe-potential sweeps, solution checks, distribution checks and trajectory dumps.

Exit codes: 0 converged, 2 not converged or check failed, 1 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import tomllib
from collections.abc import Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .characteristics import PhasePoint, SolutionCheck, check_solution, integrate_characteristic
from .config import SolverConfig
from .distributions import NormReport, from_settings, norm_report
from .envelope import RadialGridFunction
from .fixedpoint import SolveReport, iterate
from .kinetics import QuadratureError, Species
from .poisson import recover_phi
from .quadrature import QuadratureSpec
from .serialization import JSONSerializer, read_table, thread_count, write_table

logger = logging.getLogger(__name__)

EXIT_CONVERGED = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2


# ============================================================================
# OPERATIONS
# ============================================================================


def write_report(report: SolveReport, output_dir: str | Path) -> Path:
    """Profile, potential and convergence tables plus the JSON report."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_table(out / "profile.csv", report.profile_columns())
    write_table(out / "potential.csv", {"x": report.psi.nodes, "psi": report.psi.values})
    write_table(out / "convergence.csv", report.convergence_columns())
    (out / "report.json").write_text(JSONSerializer().serialize(report.to_dict()) + "\n", encoding="utf-8")
    return out


def run_solve(config: SolverConfig, output_dir: str | Path | None = None) -> SolveReport:
    """Solve once and write the outputs to output_dir (default: run.output_dir)."""
    report = iterate(config)
    target = write_report(report, output_dir if output_dir is not None else config.run.output_dir)
    logger.info("wrote %s", target)
    return report


def run_check(
    config: SolverConfig,
    *,
    n_radii: int = 5,
    n_samples: int = 200_000,
    weak_samples: int = 100_000,
    output_dir: str | Path | None = None,
) -> tuple[SolveReport, SolutionCheck]:
    """
    Solve once, then verify the result along characteristics and write check.json.

    Every random stream of the verification derives from run.seed.
    """
    report = run_solve(config, output_dir)
    f_i, f_e = config.distributions()
    check = check_solution(
        report.phi,
        {Species.ION: (f_i, report.ion_density), Species.ELECTRON: (f_e, report.electron_density)},
        n_radii=n_radii,
        n_samples=n_samples,
        weak_samples=weak_samples,
        seed=config.run.seed,
    )
    out = Path(output_dir if output_dir is not None else config.run.output_dir)
    (out / "check.json").write_text(JSONSerializer().serialize(check.to_dict()) + "\n", encoding="utf-8")
    return report, check


@dataclass(frozen=True)
class SweepRow:
    """Probe currents for one probe potential."""

    phi_p: float
    j_i: float
    j_e: float
    converged: bool
    exit_reason: str
    iterations: int

    @property
    def j_total(self) -> float:
        return self.j_i - self.j_e

    def to_dict(self) -> dict[str, Any]:
        return {
            "phi_p": self.phi_p,
            "j_i": self.j_i,
            "j_e": self.j_e,
            "j_total": self.j_total,
            "converged": self.converged,
            "exit_reason": self.exit_reason,
            "iterations": self.iterations,
        }


def _row(report: SolveReport) -> SweepRow:
    j_i, j_e = report.probe_currents
    return SweepRow(
        report.config.physics.phi_p, j_i, j_e, report.converged, str(report.exit_reason), report.iterations
    )


# one failed potential must not abort the characteristic
_ROW_ERRORS = (ValueError, ArithmeticError, OSError)


def _failed_row(phi_p: float, exc: Exception) -> SweepRow:
    logger.warning("phi_p=%g failed: %s: %s", phi_p, type(exc).__name__, exc)
    reason = "quadrature_error" if isinstance(exc, QuadratureError) else "error"
    return SweepRow(phi_p, math.nan, math.nan, False, reason, 0)


def _solve_row(values: Mapping[str, Any], phi_p: float) -> SweepRow:
    config = SolverConfig(values)
    config["physics.phi_p"] = phi_p
    try:
        return _row(iterate(config))
    except _ROW_ERRORS as exc:
        return _failed_row(phi_p, exc)


def run_sweep(
    config: SolverConfig,
    phi_p_list: Sequence[float] | None = None,
    *,
    workers: int | None = None,
    output_dir: str | Path | None = None,
) -> list[SweepRow]:
    """
    One solve per probe potential, in the given order.

    Rows are independent and run in a process pool unless sweep.warm_start is
    set, in which case each solve starts from the previous potential.

    Raises:
        ValueError: If the list of probe potentials is empty.
    """
    potentials = [float(p) for p in (phi_p_list if phi_p_list is not None else config.sweep.phi_p)]
    if not potentials:
        raise ValueError("sweep needs at least one probe potential")
    workers = workers or thread_count()
    values = config.to_dict()

    rows: list[SweepRow] = []
    if config.sweep.warm_start:
        previous: RadialGridFunction | None = None
        for phi_p in potentials:
            run = config.copy()
            run["physics.phi_p"] = phi_p
            try:
                report = iterate(run, previous)
            except _ROW_ERRORS as exc:
                rows.append(_failed_row(phi_p, exc))
                continue
            previous = report.phi
            rows.append(_row(report))
    elif workers == 1 or len(potentials) == 1:
        rows = [_solve_row(values, phi_p) for phi_p in potentials]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(potentials))) as pool:
            rows = list(pool.map(_solve_row, [values] * len(potentials), potentials))

    for row in rows:
        logger.info("phi_p=%g: j_i=%.6g j_e=%.6g (%s)", row.phi_p, row.j_i, row.j_e, row.exit_reason)

    out = Path(output_dir if output_dir is not None else config.run.output_dir)
    write_table(
        out / "sweep.csv",
        {
            "phi_p": [r.phi_p for r in rows],
            "j_i": [r.j_i for r in rows],
            "j_e": [r.j_e for r in rows],
            "j_total": [r.j_total for r in rows],
            "converged": [r.converged for r in rows],
        },
    )
    payload = {"rows": [r.to_dict() for r in rows], "config": config.to_dict(nested=True)}
    (out / "sweep.json").write_text(JSONSerializer().serialize(payload) + "\n", encoding="utf-8")
    return rows


def validate_distribution(settings: Mapping[str, Any], *, gamma: float = 0.5, **resolution: Any) -> NormReport:
    """
    Norms and density ceiling of one species section.

    Raises:
        ValueError: If the distribution cannot be built or a norm is not finite.
    """
    f = from_settings(settings)
    return norm_report(f, QuadratureSpec.covering(f, **resolution), gamma)


def trace(
    config: SolverConfig,
    point: PhasePoint,
    *,
    dt: float,
    t_max: float,
    profile: str | Path | None = None,
    output: str | Path | None = None,
) -> Path:
    """
    Integrate one characteristic and write t, r, v_r, v_theta, e, L.

    The potential comes from a profile table (columns r and phi); without one
    it is the vacuum potential φ_p(1 - x).
    """
    if profile is not None:
        table = read_table(profile)
        phi = RadialGridFunction(table["r"], table["phi"])
    else:
        x = np.linspace(0.0, 1.0, config.grid.x_nodes)
        phi = recover_phi(RadialGridFunction(x, np.zeros_like(x)), config.physics.phi_p, config.physics.r_b)
    trajectory = integrate_characteristic(point, phi, dt, t_max)
    logger.info(
        "%s characteristic: %s at t=%.6g, energy drift %.2e, momentum drift %.2e",
        point.species.name.lower(), trajectory.exit, trajectory.duration,
        trajectory.energy_drift(), trajectory.momentum_drift(),
    )
    target = Path(output) if output is not None else Path(config.run.output_dir) / "trajectory.csv"
    return write_table(target, trajectory.to_columns())


# ============================================================================
# ARGUMENT PARSING
# ============================================================================


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", nargs="?", type=Path, help="TOML settings file")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override a setting, e.g. --set physics.phi_p=-1.0 (repeatable)",
    )
    parser.add_argument("-o", "--output-dir", help="directory for output files (run.output_dir)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vpprobe", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="solve for one probe potential")
    _add_config_arguments(solve)

    sweep = commands.add_parser("sweep", help="current-voltage characteristic over probe potentials")
    _add_config_arguments(sweep)
    sweep.add_argument("--phi-p", nargs="+", type=float, help="probe potentials (sweep.phi_p)")
    sweep.add_argument("--warm-start", action="store_true", help="start each solve from the previous one")
    sweep.add_argument("--workers", type=int, help="process count (default: VPPROBE_THREADS or 1)")

    checker = commands.add_parser("check", help="solve, then verify the result along characteristics")
    _add_config_arguments(checker)
    checker.add_argument("--radii", type=int, default=5, help="interior radii per species for the density check")
    checker.add_argument("--samples", type=int, default=200_000, help="Monte-Carlo samples per radius")
    checker.add_argument("--weak-samples", type=int, default=100_000, help="samples per weak-form test function")

    validate = commands.add_parser("validate", help="check the boundary distributions")
    _add_config_arguments(validate)

    tracer = commands.add_parser("trace", help="dump one characteristic")
    _add_config_arguments(tracer)
    tracer.add_argument("--r", type=float, required=True, help="starting radius")
    tracer.add_argument("--v-r", type=float, required=True, help="radial velocity")
    tracer.add_argument("--v-theta", type=float, default=0.0, help="angular velocity")
    tracer.add_argument("--species", default="ion", choices=("ion", "electron"))
    tracer.add_argument("--dt", type=float, default=1e-3)
    tracer.add_argument("--t-max", type=float, default=50.0)
    tracer.add_argument("--profile", type=Path, help="profile CSV with columns r and phi")
    return parser


def load_config(args: argparse.Namespace) -> SolverConfig:
    """File settings, then VPPROBE_* variables, then --set overrides."""
    if args.config and not args.config.is_file():
        raise FileNotFoundError(f"no such settings file: {args.config}")
    config = SolverConfig.from_toml(args.config) if args.config else SolverConfig()
    config.load_env()
    config.apply_overrides(args.overrides)
    if args.output_dir:
        config["run.output_dir"] = args.output_dir
    return config


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def error(message: str) -> int:
    print(f"vpprobe: error: {message}", file=sys.stderr)
    return EXIT_USAGE


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose, args.quiet)

    try:
        config = load_config(args)
        if args.command == "sweep":
            if args.phi_p:
                config["sweep.phi_p"] = list(args.phi_p)
            if args.warm_start:
                config["sweep.warm_start"] = True
            if args.workers is not None and args.workers < 1:
                raise ValueError("--workers must be at least 1")
        norms = config.validate()
    except (OSError, KeyError, TypeError, ValueError, tomllib.TOMLDecodeError) as exc:
        return error(str(exc))

    match args.command:
        case "validate":
            print(JSONSerializer().serialize({name: r.to_dict() for name, r in norms.items()}))
            return EXIT_CONVERGED
        case "solve":
            try:
                report = run_solve(config)
            except _ROW_ERRORS as exc:
                return error(str(exc))
            return EXIT_CONVERGED if report.converged else EXIT_NOT_CONVERGED
        case "check":
            try:
                report, check = run_check(
                    config, n_radii=args.radii, n_samples=args.samples, weak_samples=args.weak_samples
                )
            except _ROW_ERRORS as exc:
                return error(str(exc))
            return EXIT_CONVERGED if report.converged and check.passed else EXIT_NOT_CONVERGED
        case "sweep":
            try:
                rows = run_sweep(config, workers=args.workers)
            except ValueError as exc:
                return error(str(exc))
            return EXIT_CONVERGED if all(r.converged for r in rows) else EXIT_NOT_CONVERGED
        case "trace":
            try:
                point = PhasePoint(args.r, args.v_r, args.v_theta, Species.parse(args.species))
                trace(config, point, dt=args.dt, t_max=args.t_max, profile=args.profile)
            except (OSError, ValueError) as exc:
                return error(str(exc))
            return EXIT_CONVERGED
    return error(f"unknown command {args.command!r}")
