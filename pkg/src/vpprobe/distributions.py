"""
Boundary distributions of incoming particles and their integrability norms.

A BoundaryDistribution is a non-negative function f(w, L) of the radial velocity
w < 0 and the angular velocity L at the outer boundary, symmetric in L. It
declares a truncation box outside which its mass is below a tail tolerance.

Built-in families:
    - half_maxwellian: drifting Gaussian, fast decay
    - box: constant on a rectangle, compact support
    - witness: A/(|w| + L² + 1) truncated to a declared box
    - zero: no particles
Tabulated distributions are read from CSV files with columns w, L, f.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import RegularGridInterpolator
from scipy.special import ndtr

from .quadrature import QuadratureSpec, composite_rule

logger = logging.getLogger(__name__)

type FloatArray = NDArray[np.float64]
type Evaluator = Callable[[FloatArray, FloatArray], FloatArray]

FAMILIES = ("box", "half_maxwellian", "witness", "tabulated", "zero")


@dataclass(frozen=True, eq=False)
class BoundaryDistribution:
    """
    Distribution of particles entering through the outer boundary.

    Attributes:
        evaluator: Vectorised map (w, L) -> f for w < 0.
        w_max, l_max: Declared truncation box.
        family: Family tag ("custom" for user evaluators).
        parameters: Family parameters, for reports.
        tail_tolerance: Declared bound on the mass outside the box.
        tail_mass: Mass outside the box (closed form for analytic families).
        w_breaks, l_breaks: Absolute positions of jumps in w and L.
    """

    evaluator: Evaluator
    w_max: float
    l_max: float
    family: str = "custom"
    parameters: Mapping[str, Any] = field(default_factory=dict)
    tail_tolerance: float = 1e-12
    tail_mass: float = 0.0
    w_breaks: tuple[float, ...] = ()
    l_breaks: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not (self.w_max > 0.0 and self.l_max > 0.0):
            raise ValueError(
                f"truncation box must be positive, got w_max={self.w_max}, l_max={self.l_max}"
            )
        if self.tail_tolerance < 0.0:
            raise ValueError("tail_tolerance must be non-negative")

    def __call__(self, w: ArrayLike, L: ArrayLike) -> FloatArray:
        """
        Evaluate f, returning 0 on the outgoing half-plane w ≥ 0.

        Raises:
            ValueError: If the evaluator produces negative or non-finite samples.
        """
        ww, ll = np.broadcast_arrays(np.asarray(w, dtype=float), np.asarray(L, dtype=float))
        out = np.zeros(ww.shape)
        incoming = ww < 0.0
        if np.any(incoming):
            samples = np.asarray(self.evaluator(ww[incoming], ll[incoming]), dtype=float)
            if not np.all(np.isfinite(samples)):
                raise ValueError(f"{self.family} distribution returned non-finite samples")
            if np.any(samples < 0.0):
                raise ValueError(f"{self.family} distribution returned negative samples")
            out[incoming] = samples
        return out

    @property
    def is_zero(self) -> bool:
        return self.family == "zero"

    def scaled(self, factor: float) -> BoundaryDistribution:
        """Distribution multiplied by a positive constant."""
        if factor <= 0.0:
            raise ValueError(f"scale factor must be positive, got {factor}")
        base = self.evaluator
        return replace(
            self,
            evaluator=lambda w, L: factor * base(w, L),
            tail_mass=factor * self.tail_mass,
            parameters={**self.parameters, "scale": factor},
        )


# ============================================================================
# BUILT-IN FAMILIES
# ============================================================================


def half_maxwellian(
    amplitude: float = 1.0,
    temperature: float = 1.0,
    drift: float = 0.0,
    tail_tolerance: float = 1e-12,
) -> BoundaryDistribution:
    """
    A·exp(-((w - drift)² + L²)/(2T)) on w < 0.

    The box extends k·√T beyond the drift with k chosen from the tail tolerance;
    the exact mass outside it is reported as tail_mass.

    Examples:
        >>> f = half_maxwellian()
        >>> float(f(-1.0, 0.0)) == math.exp(-0.5)
        True
    """
    if amplitude < 0.0 or temperature <= 0.0:
        raise ValueError("half_maxwellian needs amplitude >= 0 and temperature > 0")
    sigma = math.sqrt(temperature)
    reach = math.sqrt(2.0 * math.log(max(amplitude, 1.0) / tail_tolerance)) + 1.0
    w_max = abs(drift) + reach * sigma
    l_max = reach * sigma

    def evaluator(w: FloatArray, L: FloatArray) -> FloatArray:
        return amplitude * np.exp(-((w - drift) ** 2 + L**2) / (2.0 * temperature))

    gauss = math.sqrt(2.0 * math.pi) * sigma
    w_total = gauss * float(ndtr(-drift / sigma))
    w_inside = gauss * float(ndtr(-drift / sigma) - ndtr((-w_max - drift) / sigma))
    l_inside = gauss * math.erf(l_max / (math.sqrt(2.0) * sigma))
    tail = amplitude * (w_total * gauss - w_inside * l_inside)

    return BoundaryDistribution(
        evaluator,
        w_max=w_max,
        l_max=l_max,
        family="half_maxwellian",
        parameters={"amplitude": amplitude, "temperature": temperature, "drift": drift},
        tail_tolerance=tail_tolerance,
        tail_mass=max(tail, 0.0),
    )


def box(height: float = 1.0, w_width: float = 1.0, l_half_width: float = 1.0) -> BoundaryDistribution:
    """Constant height on -w_width ≤ w < 0, |L| ≤ l_half_width."""
    if height < 0.0 or w_width <= 0.0 or l_half_width <= 0.0:
        raise ValueError("box needs height >= 0 and positive widths")

    def evaluator(w: FloatArray, L: FloatArray) -> FloatArray:
        inside = (w >= -w_width) & (np.abs(L) <= l_half_width)
        return np.where(inside, height, 0.0)

    return BoundaryDistribution(
        evaluator,
        w_max=w_width,
        l_max=l_half_width,
        family="box",
        parameters={"height": height, "w_width": w_width, "l_half_width": l_half_width},
        tail_tolerance=0.0,
        w_breaks=(w_width,),
        l_breaks=(l_half_width,),
    )


def witness(amplitude: float = 1.0, w_max: float = 20.0, l_max: float = 20.0) -> BoundaryDistribution:
    """
    A/(|w| + L² + 1) restricted to |w| ≤ w_max, |L| ≤ l_max.

    The untruncated function has infinite mass (the w-decay is only 1/|w|), so
    the box is part of the definition and the tail mass is zero.
    """
    if amplitude < 0.0:
        raise ValueError("witness amplitude must be non-negative")

    def evaluator(w: FloatArray, L: FloatArray) -> FloatArray:
        inside = (w >= -w_max) & (np.abs(L) <= l_max)
        return np.where(inside, amplitude / (np.abs(w) + L**2 + 1.0), 0.0)

    return BoundaryDistribution(
        evaluator,
        w_max=w_max,
        l_max=l_max,
        family="witness",
        parameters={"amplitude": amplitude, "w_max": w_max, "l_max": l_max},
        tail_tolerance=0.0,
        w_breaks=(w_max,),
        l_breaks=(l_max,),
    )


def zero() -> BoundaryDistribution:
    """No incoming particles."""
    return BoundaryDistribution(
        lambda w, L: np.zeros(np.shape(w)),
        w_max=1.0,
        l_max=1.0,
        family="zero",
        tail_tolerance=0.0,
    )


def tabulated(
    path: str | Path,
    *,
    w_max: float,
    l_max: float,
    tail_tolerance: float,
    tail_mass: float = 0.0,
) -> BoundaryDistribution:
    """
    Distribution read from a CSV table with header columns w, L, f.

    The (w, L) samples must form a rectangular grid. Rows with L < 0 are accepted
    only if they mirror the L > 0 rows; evaluation uses |L| and bilinear
    interpolation, with zero outside the table.

    Args:
        path: CSV file.
        w_max, l_max: Declared truncation box.
        tail_tolerance: Declared mass bound outside the box.
        tail_mass: Known mass outside the box, if any.

    Raises:
        ValueError: If the table is malformed, negative or asymmetric.
    """
    table = np.genfromtxt(Path(path), delimiter=",", names=True, dtype=float)
    names = table.dtype.names or ()
    if not {"w", "L", "f"} <= set(names):
        raise ValueError(f"{path}: expected columns w, L, f, got {names}")

    w_vals, l_vals = np.unique(table["w"]), np.unique(table["L"])
    if w_vals.size * l_vals.size != table.size or w_vals.size < 2 or l_vals.size < 2:
        raise ValueError(f"{path}: samples do not form a rectangular grid")
    grid = np.full((w_vals.size, l_vals.size), np.nan)
    grid[np.searchsorted(w_vals, table["w"]), np.searchsorted(l_vals, table["L"])] = table["f"]
    if not np.all(np.isfinite(grid)) or np.any(grid < 0.0):
        raise ValueError(f"{path}: f must be finite and non-negative")

    if l_vals[0] < 0.0:
        mirrored = np.searchsorted(l_vals, -l_vals)
        if not np.array_equal(l_vals[mirrored], -l_vals) or not np.allclose(
            grid, grid[:, mirrored], rtol=0.0, atol=1e-12 * max(float(grid.max()), 1.0)
        ):
            raise ValueError(f"{path}: table is not symmetric in L")
        keep = l_vals >= 0.0
        l_vals, grid = l_vals[keep], grid[:, keep]

    interpolator = RegularGridInterpolator(
        (w_vals, l_vals), grid, method="linear", bounds_error=False, fill_value=0.0
    )

    def evaluator(w: FloatArray, L: FloatArray) -> FloatArray:
        return np.asarray(interpolator(np.stack([w, np.abs(L)], axis=-1)), dtype=float)

    logger.debug("loaded %dx%d distribution table from %s", w_vals.size, l_vals.size, path)
    return BoundaryDistribution(
        evaluator,
        w_max=w_max,
        l_max=l_max,
        family="tabulated",
        parameters={"table": str(path)},
        tail_tolerance=tail_tolerance,
        tail_mass=tail_mass,
    )


def from_settings(settings: Mapping[str, Any]) -> BoundaryDistribution:
    """
    Build a distribution from a species section of the solver configuration.

    Args:
        settings: Keys family, amplitude, temperature, drift, w_width,
            l_half_width, w_max, l_max, table, tail_tolerance.

    Raises:
        ValueError: For unknown families or missing tabulated metadata.
    """
    family = settings.get("family", "box")
    tolerance = float(settings.get("tail_tolerance", 1e-12))
    match family:
        case "box":
            return box(
                float(settings.get("amplitude", 1.0)),
                float(settings.get("w_width", 1.0)),
                float(settings.get("l_half_width", 1.0)),
            )
        case "half_maxwellian":
            return half_maxwellian(
                float(settings.get("amplitude", 1.0)),
                float(settings.get("temperature", 1.0)),
                float(settings.get("drift", 0.0)),
                tolerance,
            )
        case "witness":
            return witness(
                float(settings.get("amplitude", 1.0)),
                float(settings.get("w_max") or 20.0),
                float(settings.get("l_max") or 20.0),
            )
        case "zero":
            return zero()
        case "tabulated":
            table, w_max, l_max = settings.get("table"), settings.get("w_max"), settings.get("l_max")
            if not table or w_max is None or l_max is None:
                raise ValueError("tabulated distributions need table, w_max and l_max")
            return tabulated(table, w_max=float(w_max), l_max=float(l_max), tail_tolerance=tolerance)
        case _:
            raise ValueError(f"unknown distribution family {family!r}, expected one of {FAMILIES}")


# ============================================================================
# NORMS
# ============================================================================


def norm_L1(f: BoundaryDistribution, quad: QuadratureSpec) -> float:  # noqa: N802
    """
    ∬ |f| dw dL over the truncated incoming half-plane.

    Examples:
        >>> f = box()
        >>> round(norm_L1(f, QuadratureSpec.covering(f)), 12)
        2.0
    """
    _require_cover(f, quad)
    w, w_weights = quad.w_rule()
    ell, l_weights = quad.l_rule()
    samples = np.abs(f(w[:, None], ell[None, :]))
    return float(w_weights @ samples @ l_weights)


def norm_L1L_LinfW(f: BoundaryDistribution, quad: QuadratureSpec) -> float:  # noqa: N802
    """∫ sup_w |w·f(w, L)| dL, the sup taken on quad's w sup-grid."""
    _require_cover(f, quad)
    w = quad.sup_w_grid()
    ell, l_weights = quad.l_rule()
    sup = np.max(np.abs(w[:, None] * f(w[:, None], ell[None, :])), axis=0)
    return float(sup @ l_weights)


def norm_L1w_LinfL_gamma(f: BoundaryDistribution, gamma: float, quad: QuadratureSpec) -> float:  # noqa: N802
    """
    ∫ sup_L |f(w, L)| dw/|w|^γ, integrated in u = |w|^(1-γ).

    Raises:
        ValueError: If γ is outside (0, 1).
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    _require_cover(f, quad)
    power = 1.0 - gamma
    breaks = [0.0, quad.w_max**power, *(b**power for b in quad.w_breaks)]
    u, u_weights = composite_rule(breaks, quad.w_panels, quad.w_order)
    w = -(u ** (1.0 / power))
    ell = quad.sup_l_grid()
    sup = np.max(np.abs(f(w[:, None], ell[None, :])), axis=1)
    return float(u_weights @ sup) / power


def _require_cover(f: BoundaryDistribution, quad: QuadratureSpec) -> None:
    if not quad.covers(f):
        raise ValueError(
            f"quadrature box ({quad.w_max}, {quad.l_max}) does not cover the "
            f"{f.family} decay box ({f.w_max}, {f.l_max})"
        )


@dataclass(frozen=True)
class NormReport:
    """Integrability norms of one boundary distribution and the density ceiling they imply."""

    family: str
    l1: float
    l1l_linfw: float
    l1w_linfl_gamma: float
    gamma: float
    g_bound: float
    tail_mass: float

    @property
    def finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.l1, self.l1l_linfw, self.l1w_linfl_gamma))

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "l1": self.l1,
            "l1l_linfw": self.l1l_linfw,
            "l1w_linfl_gamma": self.l1w_linfl_gamma,
            "gamma": self.gamma,
            "g_bound": self.g_bound,
            "tail_mass": self.tail_mass,
        }


def norm_report(f: BoundaryDistribution, quad: QuadratureSpec, gamma: float = 0.5) -> NormReport:
    """
    Compute the three norms and g_bound, failing fast on non-finite results.

    Raises:
        ValueError: If any norm is not finite.
    """
    l1 = norm_L1(f, quad)
    l1l = norm_L1L_LinfW(f, quad)
    report = NormReport(
        family=f.family,
        l1=l1,
        l1l_linfw=l1l,
        l1w_linfl_gamma=norm_L1w_LinfL_gamma(f, gamma, quad),
        gamma=gamma,
        g_bound=2.0 * l1 + 4.0 * l1l,
        tail_mass=f.tail_mass,
    )
    if not report.finite:
        raise ValueError(f"{f.family} distribution fails the integrability gates: {report}")
    return report
