"""
Outer self-consistency loop.

Each pass freezes the barrier heights and barrier radii of the current
potential, solves the semilinear problem they define and recovers the next
potential. The loop stops when successive potentials agree to tol_outer or
after max_outer passes; an inner failure ends it early and is reported.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .config import SolverConfig
from .distributions import NormReport
from .envelope import RadialGridFunction
from .kinetics import ParameterSet, Species, current_density, direct_density
from .poisson import ConvergenceError, SemilinearRHS, recover_phi, solve_semilinear
from .quadrature import QuadratureSpec

logger = logging.getLogger(__name__)


class ExitReason(enum.StrEnum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    INNER_FAILURE = "inner_failure"
    INCONSISTENT = "inconsistent"


def update_parameters(phi: RadialGridFunction, quad: QuadratureSpec) -> ParameterSet:
    """Barrier heights and barrier radii of phi's effective potentials."""
    return ParameterSet.from_potential(phi, quad)


@dataclass(frozen=True)
class ConsistencyResidual:
    """
    Gaps between stored parameters and those recomputed from a potential.

    Attributes:
        height: Largest barrier-height gap, in energy units.
        barrier: Largest barrier-radius gap, in radius units.
        radial_scale: Width r_b - 1 of the annulus, used to normalise barrier.
    """

    height: float
    barrier: float
    radial_scale: float

    @property
    def total(self) -> float:
        return max(self.height, self.barrier / self.radial_scale)

    def to_dict(self) -> dict[str, float]:
        return {"height": self.height, "barrier": self.barrier, "total": self.total}


def self_consistency_residual(
    phi: RadialGridFunction, params: ParameterSet, quad: QuadratureSpec
) -> ConsistencyResidual:
    """
    Compare params with update_parameters(phi) node by node.

    Raises:
        ValueError: If params were built on other radii or other quadrature nodes.
    """
    fresh = update_parameters(phi, quad)
    if not (
        np.array_equal(fresh.radii, params.radii)
        and np.array_equal(fresh.l_nodes, params.l_nodes)
        and np.array_equal(fresh.w_nodes, params.w_nodes)
    ):
        raise ValueError("parameters and potential are tabulated on different nodes")
    height = max(
        float(np.max(np.abs(fresh.max_u - params.max_u))),
        float(np.max(np.abs(fresh.max_v - params.max_v))),
    )
    barrier = max(
        float(np.max(np.abs(fresh.barrier_i - params.barrier_i))),
        float(np.max(np.abs(fresh.barrier_e - params.barrier_e))),
    )
    return ConsistencyResidual(height, barrier, params.r_b - 1.0)


@dataclass
class SolveReport:
    """
    Outcome of iterate: final state, histories and diagnostics.

    Densities are n(r) = g(r)/r evaluated directly from the final potential;
    currents are radial current densities j(r) with r·j constant.
    """

    config: SolverConfig
    phi: RadialGridFunction
    psi: RadialGridFunction
    parameters: ParameterSet
    exit_reason: ExitReason
    increments: list[float] = field(default_factory=list)
    inner_iterations: list[int] = field(default_factory=list)
    inner_residuals: list[float] = field(default_factory=list)
    max_curvature: list[float] = field(default_factory=list)
    min_coercivity_margin: float = math.inf
    curvature_ceiling: float = math.inf
    consistency: ConsistencyResidual | None = None
    poisson_residual: float = math.nan
    ion_density: RadialGridFunction | None = None
    electron_density: RadialGridFunction | None = None
    ion_current: RadialGridFunction | None = None
    electron_current: RadialGridFunction | None = None
    norms: dict[str, NormReport] = field(default_factory=dict)
    wall_time: float = 0.0
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.exit_reason is ExitReason.CONVERGED

    @property
    def iterations(self) -> int:
        return len(self.increments)

    @property
    def probe_currents(self) -> tuple[float, float]:
        """(j_i, j_e) at the probe surface r = 1."""
        j_i = float(self.ion_current.values[0]) if self.ion_current is not None else math.nan
        j_e = float(self.electron_current.values[0]) if self.electron_current is not None else math.nan
        return j_i, j_e

    def profile_columns(self) -> dict[str, np.ndarray]:
        """Columns r, phi, n_i, n_e, j_i, j_e on the radial nodes."""
        r = self.phi.nodes
        nan = np.full_like(r, np.nan)
        return {
            "r": r,
            "phi": self.phi.values,
            "n_i": self.ion_density.values if self.ion_density is not None else nan,
            "n_e": self.electron_density.values if self.electron_density is not None else nan,
            "j_i": self.ion_current.values if self.ion_current is not None else nan,
            "j_e": self.electron_current.values if self.electron_current is not None else nan,
        }

    def convergence_columns(self) -> dict[str, np.ndarray]:
        n = self.iterations
        return {
            "iteration": np.arange(1, n + 1),
            "increment": np.asarray(self.increments, dtype=float),
            "inner_iterations": np.asarray(self.inner_iterations[:n], dtype=int),
            "inner_residual": np.asarray(self.inner_residuals[:n], dtype=float),
        }

    def to_dict(self) -> dict[str, Any]:
        """JSON payload; wall time is left out so reruns are byte-identical."""
        j_i, j_e = self.probe_currents
        return {
            "converged": self.converged,
            "exit_reason": str(self.exit_reason),
            "message": self.message,
            "iterations": self.iterations,
            "increments": list(self.increments),
            "inner_iterations": list(self.inner_iterations),
            "inner_residuals": list(self.inner_residuals),
            "max_curvature": list(self.max_curvature),
            "curvature_ceiling": self.curvature_ceiling,
            "min_coercivity_margin": self.min_coercivity_margin,
            "consistency": self.consistency.to_dict() if self.consistency is not None else None,
            "poisson_residual": self.poisson_residual,
            "probe_current": {"ion": j_i, "electron": j_e, "total": j_i - j_e},
            "norms": {name: report.to_dict() for name, report in sorted(self.norms.items())},
            "tail_mass": sum(report.tail_mass for report in self.norms.values()),
            "config": self.config.to_dict(nested=True),
        }


def _initial_potential(
    x: np.ndarray, phi_p: float, r_b: float, initial: RadialGridFunction | None
) -> RadialGridFunction:
    linear = recover_phi(RadialGridFunction(x, np.zeros_like(x)), phi_p, r_b)
    if initial is None:
        return linear
    values = initial(linear.nodes)
    values[0], values[-1] = phi_p, 0.0
    return linear.with_values(values)


def _direct_poisson_residual(
    psi: RadialGridFunction,
    n_i: RadialGridFunction,
    n_e: RadialGridFunction,
    r_b: float,
    debye_length: float,
) -> float:
    """max |ψ'' + r²·log(r_b)²·(n_i - n_e)/λ̄²| over interior nodes, densities taken without parameters."""
    x, u = psi.nodes, psi.values
    r = n_i.nodes
    h = x[1] - x[0]
    second = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / (h * h)
    g = r * r * (math.log(r_b) / debye_length) ** 2 * (n_i.values - n_e.values)
    return float(np.max(np.abs(second + g[1:-1]))) if x.size > 2 else 0.0


def iterate(config: SolverConfig, initial_phi: RadialGridFunction | None = None) -> SolveReport:
    """
    Run the fixed-point loop for one probe potential.

    The first potential is linear in x = log r / log r_b unless initial_phi is
    given (interpolated onto the grid, boundary values reset). Inner failures
    end the loop and are recorded; they are never raised.

    Raises:
        ValueError: If the configuration fails validate().
    """
    start = time.perf_counter()
    norms = config.validate()
    f_i, f_e = config.distributions()
    quad = config.quadrature_spec(f_i, f_e)

    phys = config.physics
    solver = config.solver
    r_b, phi_p = phys.r_b, phys.phi_p
    x = np.linspace(0.0, 1.0, config.grid.x_nodes)
    phi = _initial_potential(x, phi_p, r_b, initial_phi)
    psi = RadialGridFunction(x, np.zeros_like(x))
    omega = solver.relaxation

    report = SolveReport(
        config=config.copy(),
        phi=phi,
        psi=psi,
        parameters=update_parameters(phi, quad),
        exit_reason=ExitReason.MAX_ITERATIONS,
        norms=norms,
    )
    logger.info(
        "solving r_b=%g phi_p=%g with %s ions and %s electrons on %d nodes",
        r_b, phi_p, f_i.family, f_e.family, x.size,
    )

    for n in range(1, solver.max_outer + 1):
        params = update_parameters(phi, quad)
        report.parameters = params
        rhs = SemilinearRHS.from_kinetics(
            params, f_i, f_e, quad,
            phi_p=phi_p, debye_length=phys.debye_length, quad_tol=solver.quad_tol,
        )
        report.curvature_ceiling = rhs.bound
        try:
            solution = solve_semilinear(
                rhs, x.size, solver.tol_inner,
                max_iter=solver.max_inner, derivative_step=solver.derivative_step,
            )
        except ConvergenceError as exc:
            logger.warning("outer iteration %d: inner solve failed: %s", n, exc)
            report.exit_reason = ExitReason.INNER_FAILURE
            report.message = f"iteration {n}: {exc}"
            report.inner_iterations.append(len(exc.residuals) - 1)
            report.inner_residuals.append(exc.residuals[-1] if exc.residuals else math.nan)
            break

        new_phi = recover_phi(solution.psi, phi_p, r_b)
        if omega < 1.0:
            relaxed = (1.0 - omega) * phi.values + omega * new_phi.values
            relaxed[0], relaxed[-1] = phi_p, 0.0
            new_phi = new_phi.with_values(relaxed)

        increment = new_phi.sup_distance(phi)
        report.increments.append(increment)
        report.inner_iterations.append(solution.iterations)
        report.inner_residuals.append(solution.residual)
        report.max_curvature.append(solution.max_curvature)
        report.min_coercivity_margin = min(report.min_coercivity_margin, solution.min_coercivity_margin)
        logger.info(
            "outer iteration %d: |dphi| %.3e after %d Newton steps (residual %.3e)",
            n, increment, solution.iterations, solution.residual,
        )
        phi = new_phi
        if increment <= solver.tol_outer:
            report.exit_reason = ExitReason.CONVERGED
            break
    else:
        logger.warning("no convergence after %d outer iterations", solver.max_outer)
        report.message = f"increment still {report.increments[-1]:.3e} after {solver.max_outer} iterations"

    report.phi = phi
    psi_values = phi.values - phi_p * (1.0 - x)
    psi_values[0], psi_values[-1] = 0.0, 0.0
    report.psi = RadialGridFunction(x, psi_values)
    report.consistency = self_consistency_residual(phi, report.parameters, quad)
    if report.converged and report.consistency.total > solver.consistency_tol:
        report.exit_reason = ExitReason.INCONSISTENT
        report.message = f"self-consistency residual {report.consistency.total:.3e} above tolerance"
        logger.warning(report.message)

    r = phi.nodes
    g_i = direct_density(Species.ION, phi, f_i, quad)
    g_e = direct_density(Species.ELECTRON, phi, f_e, quad)
    report.ion_density = g_i.with_values(g_i.values / r)
    report.electron_density = g_e.with_values(g_e.values / r)
    report.poisson_residual = _direct_poisson_residual(
        report.psi, report.ion_density, report.electron_density, r_b, phys.debye_length
    )
    mu = phys.mass_ratio
    report.ion_current = current_density(Species.ION, phi, f_i, mu, quad)
    report.electron_current = current_density(Species.ELECTRON, phi, f_e, mu, quad)

    report.wall_time = time.perf_counter() - start
    logger.info(
        "%s after %d iterations in %.2fs (consistency %.3e, poisson %.3e)",
        report.exit_reason, report.iterations, report.wall_time,
        report.consistency.total, report.poisson_residual,
    )
    return report

