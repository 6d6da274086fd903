"""
vpprobe - stationary Vlasov-Poisson solver around a cylindrical Langmuir probe

Computes the self-consistent potential, densities and collected currents of
ions and electrons entering an annulus 1 < r < r_b from its outer boundary,
and checks them against an independent characteristics-based oracle.
"""

__version__ = "0.1.0"
__date__ = "2026-10-18"
__license__ = "MIT"

from . import validators
from .config import SolverConfig
from .distributions import BoundaryDistribution, NormReport
from .envelope import RadialGridFunction, barrier_height, dagger, rho_tilde
from .fixedpoint import SolveReport, iterate
from .kinetics import ParameterSet, Species
from .quadrature import QuadratureSpec

__all__ = [
    "BoundaryDistribution",
    "NormReport",
    "ParameterSet",
    "QuadratureSpec",
    "RadialGridFunction",
    "SolveReport",
    "SolverConfig",
    "Species",
    "barrier_height",
    "dagger",
    "iterate",
    "rho_tilde",
    "validators",
]
