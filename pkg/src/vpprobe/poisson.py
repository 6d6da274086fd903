"""
Semilinear Dirichlet problem on [0, 1] for frozen kinetic parameters.

With r = r_b^x and φ(r) = ψ(x) + φ_p(1 - x), the cylindrical Poisson equation
becomes -ψ'' = g(ψ, x), ψ(0) = ψ(1) = 0, with

    g(ν, x) = r_b^x · log(r_b)² · g̃(ν + φ_p(1 - x), r_b^x) / λ̄².

Solutions are critical points of 𝒥(ψ) = ∫ ½ψ'² - G(ψ, x) dx, G = ∫₀^ν g. The
solver minimises the discrete functional by damped Newton steps with Armijo
backtracking, starting from ψ ≡ 0.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad_vec
from scipy.linalg import solve_banded

from .distributions import BoundaryDistribution
from .envelope import RadialGridFunction
from .kinetics import ParameterSet, Species, density_bound, density_g
from .quadrature import QuadratureSpec, unit_rule

logger = logging.getLogger(__name__)

type FloatArray = NDArray[np.float64]
type RHSFunction = Callable[[FloatArray, FloatArray], FloatArray]

# Sharp constant in ½∫ψ'² ≤ 2𝒥(ψ) + κ‖g‖²_∞, attained for g ≡ c at ψ = c·x(1-x).
COERCIVITY_CONSTANT = 1.0 / 6.0

ARMIJO_SLOPE = 1e-4
MIN_STEP = 2.0**-30


class ConvergenceError(RuntimeError):
    """The semilinear solve stopped before reaching its tolerance."""

    def __init__(self, message: str, residuals: list[float], energies: list[float]) -> None:
        super().__init__(message)
        self.residuals = residuals
        self.energies = energies


# ============================================================================
# CHANGE OF VARIABLES
# ============================================================================


def to_x(r: ArrayLike, r_b: float) -> FloatArray:
    """x = log r / log r_b."""
    return np.log(np.asarray(r, dtype=float)) / math.log(r_b)


def to_r(x: ArrayLike, r_b: float) -> FloatArray:
    """r = r_b^x."""
    return np.power(float(r_b), np.asarray(x, dtype=float))


def recover_phi(psi: RadialGridFunction, phi_p: float, r_b: float) -> RadialGridFunction:
    """
    φ(r) = ψ(x) + φ_p(1 - x) on the radii r = r_b^x of psi's nodes.

    Raises:
        ValueError: If psi is not defined on [0, 1] with zero end values.
    """
    x = psi.nodes
    if x[0] != 0.0 or x[-1] != 1.0:
        raise ValueError("psi must be defined on [0, 1]")
    if psi.values[0] != 0.0 or psi.values[-1] != 0.0:
        raise ValueError("psi must vanish at x = 0 and x = 1")
    r = to_r(x, r_b)
    r[0], r[-1] = 1.0, float(r_b)
    return RadialGridFunction(r, psi.values + phi_p * (1.0 - x))


# ============================================================================
# RIGHT-HAND SIDE
# ============================================================================


@dataclass(frozen=True)
class SemilinearRHS:
    """
    Nonlinearity g(ν, x) with a sup-norm ceiling.

    Attributes:
        evaluator: Vectorised map (ν, x) -> g.
        bound: Upper bound on |g| over all (ν, x).
        quad_tol: Absolute tolerance of the adaptive primitive G.
        panels: Panels of the fixed rule used for line-search increments.
        order: Gauss points per panel of that rule.
    """

    evaluator: RHSFunction
    bound: float
    quad_tol: float = 1e-12
    panels: int = 4
    order: int = 8

    def __call__(self, nu: ArrayLike, x: ArrayLike) -> FloatArray:
        nu_, x_ = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
        return np.asarray(self.evaluator(nu_, x_), dtype=float)

    @classmethod
    def constant(cls, c: float) -> SemilinearRHS:
        return cls(lambda nu, x: np.full(np.shape(nu), float(c)), abs(float(c)))

    @classmethod
    def from_kinetics(
        cls,
        params: ParameterSet,
        f_i: BoundaryDistribution,
        f_e: BoundaryDistribution,
        quad: QuadratureSpec,
        *,
        phi_p: float,
        debye_length: float = 1.0,
        quad_tol: float = 1e-12,
    ) -> SemilinearRHS:
        """Right-hand side assembled from the net charge density for frozen parameters."""
        r_b = params.r_b
        scale = math.log(r_b) ** 2 / debye_length**2

        def evaluator(nu: FloatArray, x: FloatArray) -> FloatArray:
            r = to_r(x, r_b)
            potential = nu + phi_p * (1.0 - x)
            net = density_g(Species.ION, potential, r, params, f_i, quad) - density_g(
                Species.ELECTRON, potential, r, params, f_e, quad
            )
            return r * scale * net

        bound = r_b * scale * (density_bound(f_i, quad, r_b) + density_bound(f_e, quad, r_b))
        return cls(evaluator, bound, quad_tol)

    def increment(self, nu_from: FloatArray, nu_to: FloatArray, x: FloatArray) -> FloatArray:
        """∫ g(s, x) ds from nu_from to nu_to, node by node, on a fixed composite Gauss–Legendre rule."""
        span = nu_to - nu_from
        if not np.any(span):
            return np.zeros_like(span)
        tau, omega = unit_rule(self.panels, self.order)
        samples = self(nu_from + tau[:, None] * span, x)
        return span * (omega @ samples)

    def primitive(self, nu: ArrayLike, x: ArrayLike) -> FloatArray:
        """G(ν, x) = ∫₀^ν g(s, x) ds, adaptively to quad_tol."""
        nu_, x_ = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
        if not np.any(nu_):
            return np.zeros(nu_.shape)

        def integrand(tau: float) -> FloatArray:
            return self(tau * nu_, x_) * nu_

        value, _err = quad_vec(integrand, 0.0, 1.0, epsabs=self.quad_tol, epsrel=0.0, norm="max", limit=200)
        return np.asarray(value, dtype=float)

    def derivative(self, nu: FloatArray, x: FloatArray, step: float) -> FloatArray:
        """Central difference ∂g/∂ν."""
        return (self(nu + step, x) - self(nu - step, x)) / (2.0 * step)


# ============================================================================
# FUNCTIONAL
# ============================================================================


def _dirichlet_energy(psi: RadialGridFunction) -> float:
    # exact for the piecewise-linear interpolant
    return float(np.sum(np.diff(psi.values) ** 2 / np.diff(psi.nodes)))


def functional_J(psi: RadialGridFunction, rhs: SemilinearRHS) -> float:  # noqa: N802
    """
    Trapezoidal value of ∫₀¹ ½ψ'² - G(ψ(x), x) dx.

    Examples:
        >>> hat = RadialGridFunction(np.array([0.0, 0.5, 1.0]), np.array([0.0, 1.0, 0.0]))
        >>> functional_J(hat, SemilinearRHS.constant(0.0))
        2.0
    """
    primitive = rhs.primitive(psi.values, psi.nodes)
    return 0.5 * _dirichlet_energy(psi) - float(np.trapezoid(primitive, psi.nodes))


def coercivity_margin(psi: RadialGridFunction, rhs: SemilinearRHS) -> float:
    """2𝒥(ψ) + κ‖g‖²_∞ - ½∫ψ'², non-negative for every ψ vanishing at both ends."""
    return (
        2.0 * functional_J(psi, rhs)
        + COERCIVITY_CONSTANT * rhs.bound**2
        - 0.5 * _dirichlet_energy(psi)
    )


# ============================================================================
# SOLVER
# ============================================================================


@dataclass
class SemilinearSolution:
    """Result of solve_semilinear with its iteration history."""

    psi: RadialGridFunction
    residual: float
    iterations: int
    residuals: list[float] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    min_coercivity_margin: float = math.inf

    @property
    def max_curvature(self) -> float:
        """‖ψ''‖_∞ from second differences."""
        x, v = self.psi.nodes, self.psi.values
        h = x[1] - x[0]
        return float(np.max(np.abs(v[:-2] - 2.0 * v[1:-1] + v[2:]))) / (h * h) if v.size > 2 else 0.0


def solve_semilinear(
    rhs: SemilinearRHS,
    n_nodes: int,
    tol: float,
    *,
    max_iter: int = 200,
    derivative_step: float = 1e-7,
) -> SemilinearSolution:
    """
    Solve -ψ'' = g(ψ, x), ψ(0) = ψ(1) = 0 on a uniform grid.

    Each Newton system uses the second-difference matrix minus the clipped
    derivative of g, kept positive definite so the step is a descent direction
    for the discrete functional; steps are halved until the Armijo condition holds.

    Args:
        rhs: Bounded nonlinearity.
        n_nodes: Grid nodes including both ends (at least 3).
        tol: Bound on the sup norm of -ψ'' - g(ψ, ·) at interior nodes.
        max_iter: Newton iteration cap.
        derivative_step: Step of the central difference for ∂g/∂ν.

    Raises:
        ValueError: If n_nodes < 3 or tol <= 0.
        ConvergenceError: If the cap is reached or the line search stalls.
    """
    if n_nodes < 3:
        raise ValueError(f"n_nodes must be at least 3, got {n_nodes}")
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")

    x = np.linspace(0.0, 1.0, n_nodes)
    h = 1.0 / (n_nodes - 1)
    xi = x[1:-1]
    m = xi.size
    # half the smallest eigenvalue of the second-difference operator
    curvature_cap = 0.5 * (4.0 / h**2) * math.sin(0.5 * math.pi * h) ** 2

    u = np.zeros(m)
    primitive = np.zeros(m)
    energy = 0.0
    residuals: list[float] = []
    energies: list[float] = [energy]
    min_margin = COERCIVITY_CONSTANT * rhs.bound**2

    def laplacian(v: FloatArray) -> FloatArray:
        padded = np.concatenate(([0.0], v, [0.0]))
        return (2.0 * padded[1:-1] - padded[:-2] - padded[2:]) / h**2

    for iteration in range(max_iter + 1):
        g = rhs(u, xi)
        au = laplacian(u)
        F = au - g
        residual = float(np.max(np.abs(F)))
        residuals.append(residual)
        logger.debug("newton %d: residual %.3e energy %.12e", iteration, residual, energy)
        if residual <= tol:
            psi = RadialGridFunction(x, np.concatenate(([0.0], u, [0.0])))
            return SemilinearSolution(psi, residual, iteration, residuals, energies, min_margin)
        if iteration == max_iter:
            break

        dg = np.minimum(rhs.derivative(u, xi, derivative_step), curvature_cap)
        bands = np.zeros((3, m))
        bands[0, 1:] = -1.0 / h**2
        bands[1, :] = 2.0 / h**2 - dg
        bands[2, :-1] = -1.0 / h**2
        d = solve_banded((1, 1), bands, -F)

        slope = h * float(F @ d)
        ad = laplacian(d)
        alpha = 1.0
        while True:
            trial = u + alpha * d
            gained = rhs.increment(u, trial, xi)
            change = (
                h * alpha * float(au @ d)
                + 0.5 * h * alpha**2 * float(d @ ad)
                - h * float(np.sum(gained))
            )
            if change <= ARMIJO_SLOPE * alpha * slope + 1e-14 * (1.0 + abs(energy)):
                break
            alpha *= 0.5
            if alpha < MIN_STEP:
                raise ConvergenceError(
                    f"line search stalled at residual {residual:.3e}", residuals, energies
                )

        u = trial
        primitive = primitive + gained
        kinetic = 0.5 * h * float(u @ laplacian(u))
        energy = kinetic - h * float(np.sum(primitive))
        energies.append(energy)
        min_margin = min(min_margin, 2.0 * energy + COERCIVITY_CONSTANT * rhs.bound**2 - kinetic)

    raise ConvergenceError(
        f"no convergence in {max_iter} Newton steps, residual {residuals[-1]:.3e}",
        residuals,
        energies,
    )
