"""
Monotone envelopes and barrier radii on radial grids.

A RadialGridFunction holds a scalar field (potential, effective potential,
density) sampled on a strictly increasing grid, usually [1, r_b] or the reduced
interval [0, 1]. The dagger transform replaces a profile by its smallest
non-increasing majorant and rho_tilde finds the leftmost radius beyond which a
profile stays below a given energy level.

Both transforms work on the piecewise-linear interpolant of the node values.
The majorant of a piecewise-linear profile is not piecewise linear between
nodes, so dagger() returns a function with the ENVELOPE interpolation rule: the
node values are suffix maxima and between nodes the exact envelope of the
source interpolant is evaluated.
"""

from __future__ import annotations

import enum
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

type FloatArray = NDArray[np.float64]


class Interpolation(enum.StrEnum):
    """Rule used to evaluate a grid function between its nodes."""

    LINEAR = "linear"
    ENVELOPE = "envelope"


@dataclass(frozen=True, eq=False)
class RadialGridFunction:
    """
    Scalar field on a one-dimensional grid.

    Attributes:
        nodes: Strictly increasing abscissae (at least two).
        values: Finite value per node.
        interpolation: LINEAR for ordinary profiles, ENVELOPE for the output of dagger().
        source: For ENVELOPE functions, the piecewise-linear profile the envelope
            was taken of. None otherwise.

    Examples:
        >>> phi = RadialGridFunction.uniform(1.0, 2.0, 11, lambda r: 1.0 / r)
        >>> float(phi(1.0))
        1.0
    """

    nodes: FloatArray
    values: FloatArray
    interpolation: Interpolation = Interpolation.LINEAR
    source: FloatArray | None = None

    def __post_init__(self) -> None:
        nodes = np.array(self.nodes, dtype=float)
        values = np.array(self.values, dtype=float)

        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError(f"grid needs at least 2 nodes, got shape {nodes.shape}")
        if values.shape != nodes.shape:
            raise ValueError(
                f"values shape {values.shape} does not match nodes shape {nodes.shape}"
            )
        if not np.all(np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0.0):
            raise ValueError("grid nodes must be finite and strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite at every node")

        source = None
        if self.interpolation is Interpolation.ENVELOPE:
            if self.source is None:
                raise ValueError("an ENVELOPE grid function needs its source profile")
            source = np.array(self.source, dtype=float)
            if source.shape != nodes.shape or not np.all(np.isfinite(source)):
                raise ValueError("envelope source must be finite and match the grid")
            source.setflags(write=False)
        elif self.source is not None:
            raise ValueError("source is only meaningful for ENVELOPE grid functions")

        nodes.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "interpolation", Interpolation(self.interpolation))
        object.__setattr__(self, "source", source)

    # ========================================================================
    # CONSTRUCTORS
    # ========================================================================

    @classmethod
    def from_callable(
        cls, func: Callable[[FloatArray], ArrayLike], nodes: ArrayLike
    ) -> RadialGridFunction:
        """Sample a vectorised callable on the given nodes."""
        grid = np.asarray(nodes, dtype=float)
        values = np.broadcast_to(np.asarray(func(grid), dtype=float), grid.shape)
        return cls(grid, values)

    @classmethod
    def uniform(
        cls,
        start: float,
        stop: float,
        n_nodes: int,
        func: Callable[[FloatArray], ArrayLike] | None = None,
    ) -> RadialGridFunction:
        """
        Uniform grid on [start, stop], zero-valued unless func is given.

        Examples:
            >>> RadialGridFunction.uniform(1.0, 2.0, 3).values.tolist()
            [0.0, 0.0, 0.0]
        """
        grid = np.linspace(start, stop, n_nodes)
        if func is None:
            return cls(grid, np.zeros_like(grid))
        return cls.from_callable(func, grid)

    def with_values(self, values: ArrayLike) -> RadialGridFunction:
        """Piecewise-linear function on the same nodes with new values."""
        return RadialGridFunction(self.nodes, np.asarray(values, dtype=float))

    # ========================================================================
    # EVALUATION
    # ========================================================================

    @property
    def start(self) -> float:
        return float(self.nodes[0])

    @property
    def end(self) -> float:
        return float(self.nodes[-1])

    @property
    def base(self) -> FloatArray:
        """Node values of the piecewise-linear profile that defines this function."""
        return self.source if self.source is not None else self.values

    def __call__(self, r: ArrayLike) -> FloatArray:
        points = np.asarray(r, dtype=float)
        if self.interpolation is Interpolation.LINEAR:
            return np.interp(points, self.nodes, self.values)
        return suffix_max_at(self.nodes, self.base[None, :], points, suffix=self.values[None, :])[0]

    def slope(self, r: ArrayLike) -> FloatArray:
        """Derivative of the linear interpolant (right-continuous, last segment at the end)."""
        points = np.asarray(r, dtype=float)
        k = _segment_index(self.nodes, points)
        slopes = np.diff(self.values) / np.diff(self.nodes)
        return slopes[k]

    def sup_distance(self, other: RadialGridFunction) -> float:
        """Sup-norm distance between node values on a shared grid."""
        if other.nodes.shape != self.nodes.shape or not np.array_equal(other.nodes, self.nodes):
            raise ValueError("sup_distance needs both functions on the same nodes")
        return float(np.max(np.abs(self.values - other.values)))

    def is_non_increasing(self) -> bool:
        return bool(np.all(np.diff(self.values) <= 0.0))

    def __len__(self) -> int:
        return int(self.nodes.size)

    def __repr__(self) -> str:
        return (
            f"RadialGridFunction(n={self.nodes.size}, [{self.start:g}, {self.end:g}], "
            f"{self.interpolation.value})"
        )


# ============================================================================
# TRANSFORMS
# ============================================================================


def suffix_max(values: ArrayLike) -> FloatArray:
    """Running maximum from the right along the last axis."""
    arr = np.asarray(values, dtype=float)
    return np.flip(np.maximum.accumulate(np.flip(arr, axis=-1), axis=-1), axis=-1)


def dagger(f: RadialGridFunction) -> RadialGridFunction:
    """
    Smallest non-increasing majorant of f.

    Node values are the suffix maxima of f's profile; the result keeps the
    profile as its source so evaluation between nodes is exact.

    Examples:
        >>> bump = RadialGridFunction.uniform(1.0, 2.0, 5, lambda r: 1.0 - (r - 1.5) ** 2)
        >>> dagger(bump).values.tolist()
        [1.0, 1.0, 1.0, 0.9375, 0.75]
    """
    profile = f.base
    return RadialGridFunction(
        f.nodes, suffix_max(profile), Interpolation.ENVELOPE, source=profile
    )


def barrier_height(f: RadialGridFunction) -> float:
    """Maximum of the interpolant, attained at a node."""
    return float(np.max(f.base))


def effective_potential(phi: RadialGridFunction, L: float, species_sign: int) -> RadialGridFunction:
    """
    Effective radial potential L²/(2r²) + sign·φ(r) on phi's nodes.

    Args:
        phi: Electric potential.
        L: Angular momentum.
        species_sign: +1 for ions, -1 for electrons.

    Raises:
        ValueError: If species_sign is not +1 or -1.
    """
    if species_sign not in (1, -1):
        raise ValueError(f"species_sign must be +1 or -1, got {species_sign}")
    r = phi.nodes
    return RadialGridFunction(r, L * L / (2.0 * r * r) + int(species_sign) * phi.values)


def rho_tilde(f: RadialGridFunction, e: float) -> float:
    """
    Leftmost radius a such that f ≤ e on [a, r_b].

    Args:
        f: Profile (its piecewise-linear source is used for ENVELOPE functions).
        e: Energy level, at least f(r_b).

    Raises:
        ValueError: If e < f(r_b), where the defining set is empty.

    Examples:
        >>> U = RadialGridFunction.uniform(1.0, 2.0, 101, lambda r: 1.0 / r)
        >>> rho_tilde(U, 2.0)
        1.0
    """
    profile = f.base
    if e < profile[-1]:
        raise ValueError(f"energy level {e!r} is below the outer value {profile[-1]!r}")
    return float(rho_tilde_rows(f.nodes, profile[None, :], np.array([[e]], dtype=float))[0, 0])


def rho_tilde_rows(nodes: ArrayLike, profiles: ArrayLike, energies: ArrayLike) -> FloatArray:
    """
    Barrier radius for a batch of profiles, several energy levels each.

    Args:
        nodes: Shared grid, shape (n,).
        profiles: Piecewise-linear profiles, shape (m, n).
        energies: Levels, shape (m, k); row i is paired with profile i.

    Returns:
        Radii of shape (m, k).

    Raises:
        ValueError: If a level lies below its profile's outer value.
    """
    grid = np.asarray(nodes, dtype=float)
    rows = np.atleast_2d(np.asarray(profiles, dtype=float))
    levels = np.asarray(energies, dtype=float).reshape(rows.shape[0], -1)
    if np.any(levels < rows[:, -1:]):
        raise ValueError("energy level below the outer value of its profile")

    suffix = suffix_max(rows)
    # suffix is non-increasing, so the count locates the last node strictly above e
    count = np.count_nonzero(suffix[:, None, :] > levels[:, :, None], axis=-1)
    k = np.clip(count - 1, 0, grid.size - 2)
    upper = np.take_along_axis(rows, k, axis=1)
    lower = np.take_along_axis(rows, k + 1, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (levels - upper) / (lower - upper)
    crossing = grid[k] + t * (grid[k + 1] - grid[k])
    return np.where(count == 0, grid[0], crossing)


def suffix_max_at(
    nodes: ArrayLike,
    profiles: ArrayLike,
    r: ArrayLike,
    *,
    suffix: ArrayLike | None = None,
) -> FloatArray:
    """
    Exact non-increasing envelope of piecewise-linear profiles at arbitrary radii.

    Args:
        nodes: Shared grid, shape (n,).
        profiles: Profiles, shape (m, n).
        r: Evaluation radii, any shape; clipped to the grid.
        suffix: Precomputed suffix_max(profiles).

    Returns:
        Array of shape (m, *r.shape).
    """
    grid = np.asarray(nodes, dtype=float)
    rows = np.atleast_2d(np.asarray(profiles, dtype=float))
    peaks = suffix_max(rows) if suffix is None else np.atleast_2d(np.asarray(suffix, dtype=float))
    points = np.asarray(r, dtype=float)

    k = _segment_index(grid, points)
    t = np.clip((points - grid[k]) / (grid[k + 1] - grid[k]), 0.0, 1.0)
    left = rows[:, k]
    linear = left + t * (rows[:, k + 1] - left)
    return np.maximum(linear, peaks[:, k + 1])


def _segment_index(grid: FloatArray, points: FloatArray) -> NDArray[np.intp]:
    return np.clip(np.searchsorted(grid, points, side="right") - 1, 0, grid.size - 2)
