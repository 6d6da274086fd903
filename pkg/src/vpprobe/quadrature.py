"""Composite Gauss–Legendre rules and the (w, L) node layout used by the density integrals."""

from __future__ import annotations

import functools
from collections.abc import Iterable
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray

if TYPE_CHECKING:
    from .distributions import BoundaryDistribution

type FloatArray = NDArray[np.float64]
type Rule = tuple[FloatArray, FloatArray]


@functools.cache
def _legendre_unit(order: int) -> Rule:
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = 0.5 * (x + 1.0), 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def unit_rule(panels: int, order: int) -> Rule:
    """Composite Gauss–Legendre rule on [0, 1] with equal panels."""
    tau, omega = _legendre_unit(order)
    offsets = np.arange(panels, dtype=float)[:, None]
    return ((offsets + tau) / panels).ravel(), np.tile(omega / panels, panels)


def composite_rule(breaks: Iterable[float], panels: int, order: int) -> Rule:
    """
    Composite rule over consecutive intervals of a sorted breakpoint list.

    Each non-empty interval gets its own panels, so no panel straddles a break.
    """
    points = np.asarray(sorted(set(float(b) for b in breaks)), dtype=float)
    tau, omega = unit_rule(panels, order)
    widths = np.diff(points)
    keep = widths > 0.0
    starts, widths = points[:-1][keep], widths[keep]
    nodes = (starts[:, None] + widths[:, None] * tau).ravel()
    weights = (widths[:, None] * omega).ravel()
    return nodes, weights


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Truncation box and node layout for integrals over the incoming half-plane.

    The box is expressed in the boundary frame of the distributions: w ∈ [-w_max, 0)
    and ℓ = L/r_b ∈ [-l_max, l_max]. Breakpoints are absolute values where an
    integrand has jumps (box edges); panels are split there.

    Attributes:
        w_max: Radial-velocity truncation.
        l_max: Angular-velocity truncation at the outer boundary.
        l_panels, l_order: Panels per interval and Gauss order of the ℓ rule.
        w_panels, w_order: Same for every w-segment between indicator thresholds.
        sup_points: Resolution of the uniform grids used for sup-norms.
        barrier_nodes: Number of w-nodes where barrier radii are tabulated.
        w_breaks, l_breaks: Discontinuity locations (absolute values).
        substitution: Resolve the inverse square-root singularity by w = -√(β + t²).
    """

    w_max: float
    l_max: float
    l_panels: int = 8
    l_order: int = 16
    w_panels: int = 2
    w_order: int = 16
    sup_points: int = 2001
    barrier_nodes: int = 257
    w_breaks: tuple[float, ...] = ()
    l_breaks: tuple[float, ...] = ()
    substitution: bool = True

    def __post_init__(self) -> None:
        if not (np.isfinite(self.w_max) and self.w_max > 0.0):
            raise ValueError(f"w_max must be positive and finite, got {self.w_max}")
        if not (np.isfinite(self.l_max) and self.l_max > 0.0):
            raise ValueError(f"l_max must be positive and finite, got {self.l_max}")
        for name in ("l_panels", "l_order", "w_panels", "w_order"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.sup_points < 2 or self.barrier_nodes < 2:
            raise ValueError("sup_points and barrier_nodes must be at least 2")
        object.__setattr__(self, "w_breaks", _interior(self.w_breaks, self.w_max))
        object.__setattr__(self, "l_breaks", _interior(self.l_breaks, self.l_max))

    @classmethod
    def covering(cls, *distributions: BoundaryDistribution, **resolution: int | float | bool) -> QuadratureSpec:
        """Smallest box covering every distribution's declared decay box."""
        if not distributions:
            raise ValueError("covering() needs at least one distribution")
        return cls(
            w_max=max(d.w_max for d in distributions),
            l_max=max(d.l_max for d in distributions),
            w_breaks=tuple(b for d in distributions for b in d.w_breaks),
            l_breaks=tuple(b for d in distributions for b in d.l_breaks),
            **resolution,  # type: ignore[arg-type]
        )

    def covers(self, f: BoundaryDistribution) -> bool:
        return self.w_max >= f.w_max and self.l_max >= f.l_max

    def refined(self) -> QuadratureSpec:
        """Same layout with twice the panels in both directions."""
        return replace(self, l_panels=2 * self.l_panels, w_panels=2 * self.w_panels)

    # ========================================================================
    # NODE SETS
    # ========================================================================

    def l_rule(self) -> Rule:
        """Symmetric rule for ℓ on [-l_max, l_max]."""
        breaks = [-self.l_max, 0.0, self.l_max, *self.l_breaks, *(-b for b in self.l_breaks)]
        return composite_rule(breaks, self.l_panels, self.l_order)

    def w_rule(self) -> Rule:
        """Rule for w on [-w_max, 0]."""
        breaks = [-self.w_max, 0.0, *(-b for b in self.w_breaks)]
        return composite_rule(breaks, self.w_panels, self.w_order)

    def segment_rule(self) -> Rule:
        """Unit rule applied to each w-segment between indicator thresholds."""
        return unit_rule(self.w_panels, self.w_order)

    def sup_w_grid(self) -> FloatArray:
        grid = np.linspace(-self.w_max, 0.0, self.sup_points)
        return np.union1d(grid, [-b for b in self.w_breaks])

    def sup_l_grid(self) -> FloatArray:
        grid = np.linspace(-self.l_max, self.l_max, self.sup_points)
        return np.union1d(grid, [*self.l_breaks, *(-b for b in self.l_breaks)])

    def barrier_w_grid(self) -> FloatArray:
        return np.linspace(-self.w_max, 0.0, self.barrier_nodes)


def _interior(breaks: Iterable[float], limit: float) -> tuple[float, ...]:
    return tuple(sorted({abs(float(b)) for b in breaks if 0.0 < abs(float(b)) < limit}))
