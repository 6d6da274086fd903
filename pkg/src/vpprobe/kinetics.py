"""
Densities and currents of the particles coming from the outer boundary.

Everything here is expressed with the potential referenced to the outer
boundary (φ(r_b) = 0), in the frame where both species obey the same Vlasov
equation. The ion density at radius r for a trial potential value ν is

    g_i(ν, r) = ∬ Γ(ν, r, w, L) f_i(w, L/r_b) (1 + 1[w² + L²/r_b² < 2𝔘_L]) 1[r ≥ ℜ_i(w, L)] dw dL

and g_i = r·n_i when the parameters are consistent with the potential. The
electron density uses -ν, 𝔙_L and ℜ_e. Particles whose energy lies below the
barrier are reflected and counted for both signs of v_r; particles above it
reach the probe and are counted once.
"""

from __future__ import annotations

import enum
import functools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .distributions import BoundaryDistribution, norm_L1, norm_L1L_LinfW
from .envelope import RadialGridFunction, rho_tilde_rows, suffix_max, suffix_max_at
from .quadrature import QuadratureSpec

logger = logging.getLogger(__name__)

type FloatArray = NDArray[np.float64]

# Profile level that no energy can be below; gives barrier radius 1 everywhere.
OPEN_PROFILE = -1e300

_CHUNK = 64


class Species(enum.IntEnum):
    """Particle species; the value is the sign of the charge in the rescaled frame."""

    ION = 1
    ELECTRON = -1

    @property
    def sign(self) -> int:
        return int(self.value)

    @classmethod
    def parse(cls, value: str | int) -> Species:
        if isinstance(value, str):
            try:
                return cls[value.upper()]
            except KeyError:
                raise ValueError(f"unknown species {value!r}, expected 'ion' or 'electron'") from None
        return cls(value)


class QuadratureError(ValueError):
    """Density quadrature produced a non-finite value."""

    def __init__(self, r: float, nu: float) -> None:
        super().__init__(f"non-finite density at r={r!r}, nu={nu!r}")
        self.r = r
        self.nu = nu


# ============================================================================
# KERNEL
# ============================================================================


def beta(nu: ArrayLike, r: ArrayLike, L: ArrayLike, *, r_b: float) -> FloatArray:
    """
    2ν + L²(1/r² - 1/r_b²).

    Examples:
        >>> float(beta(1.0, 1.0, 1.0, r_b=2.0))
        2.75
    """
    nu_, r_, L_ = (np.asarray(a, dtype=float) for a in (nu, r, L))
    return 2.0 * nu_ + L_ * L_ * (1.0 / (r_ * r_) - 1.0 / (r_b * r_b))


def gamma_kernel(nu: ArrayLike, r: ArrayLike, w: ArrayLike, L: ArrayLike, *, r_b: float) -> FloatArray:
    """(w)₋/√(w² - β) where w² > β, else 0."""
    b = beta(nu, r, L, r_b=r_b)
    w_ = np.asarray(w, dtype=float)
    gap = w_ * w_ - b
    support = (w_ < 0.0) & (gap > 0.0)
    safe = np.where(support, gap, 1.0)
    return np.where(support, -w_ / np.sqrt(safe), 0.0)


# ============================================================================
# PARAMETERS
# ============================================================================


@dataclass(frozen=True, eq=False)
class ParameterSet:
    """
    Frozen non-local parameters for one pass of the density evaluation.

    The barrier radii are generated by frozen effective-potential profiles:
    ℜ(w, L) = ρ̃[profile_L](w²/2 + L²/(2r_b²)). Keeping the profiles lets the
    density thresholds be applied exactly at any radius; the tabulated radii on
    (L, w) nodes are what the self-consistency check compares.

    Attributes:
        r_b: Outer radius.
        l_nodes, l_weights: Angular-momentum nodes L = r_b·ℓ and weights for dL.
        radii: Radial grid of the profiles.
        ion_profiles, electron_profiles: Frozen U_L and V_L rows, shape (n_L, n_r).
        max_u, max_v: Barrier heights 𝔘_L, 𝔙_L.
        w_nodes: Radial velocities where the barrier radii are tabulated.
        barrier_i, barrier_e: ℜ_i, ℜ_e on (L, w) nodes, shape (n_L, n_w).
    """

    r_b: float
    l_nodes: FloatArray
    l_weights: FloatArray
    radii: FloatArray
    ion_profiles: FloatArray
    electron_profiles: FloatArray
    max_u: FloatArray
    max_v: FloatArray
    w_nodes: FloatArray
    barrier_i: FloatArray
    barrier_e: FloatArray

    @classmethod
    def from_profiles(
        cls,
        radii: ArrayLike,
        quad: QuadratureSpec,
        ion_profiles: ArrayLike,
        electron_profiles: ArrayLike,
        *,
        max_u: ArrayLike | None = None,
        max_v: ArrayLike | None = None,
    ) -> ParameterSet:
        """
        Assemble parameters from frozen profiles on quad's L-nodes.

        Heights default to the profile maxima.
        """
        grid = np.asarray(radii, dtype=float)
        r_b = float(grid[-1])
        ell, ell_weights = quad.l_rule()
        L = r_b * ell
        ions = np.asarray(ion_profiles, dtype=float).reshape(L.size, grid.size)
        electrons = np.asarray(electron_profiles, dtype=float).reshape(L.size, grid.size)
        w = quad.barrier_w_grid()
        kinetic = 0.5 * w * w
        return cls(
            r_b=r_b,
            l_nodes=L,
            l_weights=r_b * ell_weights,
            radii=grid,
            ion_profiles=ions,
            electron_profiles=electrons,
            max_u=ions.max(axis=1) if max_u is None else np.broadcast_to(max_u, L.shape).astype(float),
            max_v=electrons.max(axis=1) if max_v is None else np.broadcast_to(max_v, L.shape).astype(float),
            w_nodes=w,
            barrier_i=rho_tilde_rows(grid, ions, ions[:, -1:] + kinetic),
            barrier_e=rho_tilde_rows(grid, electrons, electrons[:, -1:] + kinetic),
        )

    @classmethod
    def from_potential(cls, phi: RadialGridFunction, quad: QuadratureSpec) -> ParameterSet:
        """Parameters consistent with phi: heights and barrier radii of its effective potentials."""
        ions, electrons = effective_profiles(phi, quad)
        return cls.from_profiles(phi.nodes, quad, ions, electrons)

    @classmethod
    def open(
        cls, radii: ArrayLike, quad: QuadratureSpec, *, max_height: float
    ) -> ParameterSet:
        """Parameters with ℜ ≡ 1 and a common barrier height (may be ±inf)."""
        grid = np.asarray(radii, dtype=float)
        n_l = quad.l_rule()[0].size
        floor = np.full((n_l, grid.size), OPEN_PROFILE)
        return cls.from_profiles(grid, quad, floor, floor, max_u=max_height, max_v=max_height)

    def profiles(self, species: Species) -> FloatArray:
        return self.ion_profiles if species is Species.ION else self.electron_profiles

    def heights(self, species: Species) -> FloatArray:
        return self.max_u if species is Species.ION else self.max_v

    def barriers(self, species: Species) -> FloatArray:
        return self.barrier_i if species is Species.ION else self.barrier_e

    @functools.cached_property
    def _suffix(self) -> tuple[FloatArray, FloatArray]:
        return suffix_max(self.ion_profiles), suffix_max(self.electron_profiles)

    def envelope_at(self, species: Species, r: ArrayLike) -> FloatArray:
        """Exact non-increasing envelope of every L-profile at radii r, shape (n_L, *r.shape)."""
        suffix = self._suffix[0] if species is Species.ION else self._suffix[1]
        return suffix_max_at(self.radii, self.profiles(species), r, suffix=suffix)

    def with_profiles(self, species: Species, profiles: ArrayLike, quad: QuadratureSpec) -> ParameterSet:
        """Replace one species' barrier profiles, keeping every barrier height."""
        ions = profiles if species is Species.ION else self.ion_profiles
        electrons = profiles if species is Species.ELECTRON else self.electron_profiles
        return ParameterSet.from_profiles(
            self.radii, quad, ions, electrons, max_u=self.max_u, max_v=self.max_v
        )


def effective_profiles(phi: RadialGridFunction, quad: QuadratureSpec) -> tuple[FloatArray, FloatArray]:
    """U_L and V_L rows on quad's L-nodes for phi referenced to its outer value."""
    r = phi.nodes
    potential = phi.base - phi.base[-1]
    L = float(r[-1]) * quad.l_rule()[0]
    centrifugal = (L * L)[:, None] / (2.0 * r * r)[None, :]
    return centrifugal + potential, centrifugal - potential


# ============================================================================
# DENSITIES
# ============================================================================


def density_g(
    species: Species,
    nu: ArrayLike,
    r: ArrayLike,
    params: ParameterSet,
    f: BoundaryDistribution,
    quad: QuadratureSpec,
) -> FloatArray:
    """
    Parametrised density r·n(r) of one species for trial potential values ν.

    ν and r broadcast against each other. On each L-node the w-integral is split
    at the Γ support edge, the barrier threshold, the reflection threshold and
    the distribution's jumps; each piece is integrated with Gauss–Legendre panels.

    Raises:
        QuadratureError: If a result is not finite.
    """
    species = Species(species)
    nu_b, r_b_ = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(r, dtype=float))
    shape = nu_b.shape
    nus, radii = nu_b.ravel(), r_b_.ravel()
    if f.is_zero:
        return np.zeros(shape)

    out = np.empty(nus.size)
    for start in range(0, nus.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        out[sl] = _density_chunk(species, nus[sl], radii[sl], params, f, quad)

    bad = ~np.isfinite(out)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise QuadratureError(float(radii[i]), float(nus[i]))
    return out.reshape(shape)


def _density_chunk(
    species: Species,
    nu: FloatArray,
    r: FloatArray,
    params: ParameterSet,
    f: BoundaryDistribution,
    quad: QuadratureSpec,
) -> FloatArray:
    r_b = params.r_b
    L = params.l_nodes
    outer = L * L / (r_b * r_b)

    b = beta(species.sign * nu[:, None], r[:, None], L[None, :], r_b=r_b)
    c_barrier = 2.0 * params.envelope_at(species, r).T - outer
    c_double = 2.0 * params.heights(species) - outer

    # all thresholds are levels of q = w²
    q_lo = np.maximum(np.maximum(b, c_barrier), 0.0)
    q_hi = np.maximum(quad.w_max**2, q_lo)
    cuts = [q_lo, np.clip(c_double, q_lo, q_hi)]
    cuts += [np.clip(edge * edge, q_lo, q_hi) for edge in quad.w_breaks]
    cuts.append(q_hi)
    q = np.sort(np.stack(cuts, axis=-1), axis=-1)
    q_mid = 0.5 * (q[..., :-1] + q[..., 1:])
    weight = np.where(q_mid < c_double[None, :, None], 2.0, 1.0)

    tau, omega = quad.segment_rule()
    ell = (L / r_b)[None, :, None, None]

    if quad.substitution:
        b_pos = np.maximum(b, 0.0)[..., None]
        t = np.sqrt(np.maximum(q - b_pos, 0.0))
        dt = np.diff(t, axis=-1)
        nodes = t[..., :-1, None] + dt[..., None] * tau
        w = -np.sqrt(b_pos[..., None] + nodes * nodes)
        with np.errstate(divide="ignore", invalid="ignore"):
            smooth = nodes / np.sqrt(nodes * nodes - b[..., None, None])
        # w = -√(β + t²) turns Γ dw into dt when β > 0
        kernel = np.where(b[..., None, None] > 0.0, 1.0, np.where(np.isfinite(smooth), smooth, 1.0))
        step = dt
    else:
        edges = -np.sqrt(q)
        step = edges[..., :-1] - edges[..., 1:]
        w = edges[..., 1:, None] + step[..., None] * tau
        gap = w * w - b[..., None, None]
        kernel = np.where(gap > 0.0, -w / np.sqrt(np.where(gap > 0.0, gap, 1.0)), 0.0)

    samples = f(w, ell)
    per_l = np.einsum("pjs,pjsm,pjsm,m->pj", weight * step, kernel, samples, omega)
    return per_l @ params.l_weights


def gtilde(
    nu: ArrayLike,
    r: ArrayLike,
    params: ParameterSet,
    f_i: BoundaryDistribution,
    f_e: BoundaryDistribution,
    quad: QuadratureSpec,
) -> FloatArray:
    """Net charge density g_i - g_e."""
    return density_g(Species.ION, nu, r, params, f_i, quad) - density_g(
        Species.ELECTRON, nu, r, params, f_e, quad
    )


def direct_density(
    species: Species, phi: RadialGridFunction, f: BoundaryDistribution, quad: QuadratureSpec
) -> RadialGridFunction:
    """r·n(r) on phi's nodes with the non-local quantities taken from phi itself."""
    params = ParameterSet.from_potential(phi, quad)
    potential = phi.base - phi.base[-1]
    return phi.with_values(density_g(species, potential, phi.nodes, params, f, quad))


def g_bound(f: BoundaryDistribution, quad: QuadratureSpec) -> float:
    """2‖f‖_{L¹} + 4‖f‖_{L¹_L(L^∞_w(w dw))}."""
    if f.is_zero:
        return 0.0
    return 2.0 * norm_L1(f, quad) + 4.0 * norm_L1L_LinfW(f, quad)


def density_bound(f: BoundaryDistribution, quad: QuadratureSpec, r_b: float) -> float:
    """
    Ceiling for density_g over all (ν, r).

    The reflection weight is at most 2 and the L-integral of f(w, L/r_b) is
    r_b times the ℓ-integral, hence 2·r_b·g_bound.
    """
    return 2.0 * r_b * g_bound(f, quad)


# ============================================================================
# CURRENTS
# ============================================================================


def current_density(
    species: Species,
    phi: RadialGridFunction,
    f: BoundaryDistribution,
    mu: float,
    quad: QuadratureSpec,
) -> RadialGridFunction:
    """
    Radial current density j(r) of the particles absorbed by the probe.

    Only particles with w < -√(2(𝔐_L - 𝔐_L(r_b))) clear the barrier; r·j(r)
    is therefore one number, and j ≤ 0. The electron current carries 1/√μ.
    """
    species = Species(species)
    r = phi.nodes
    if f.is_zero:
        return phi.with_values(np.zeros_like(r))

    ions, electrons = effective_profiles(phi, quad)
    rows = ions if species is Species.ION else electrons
    ell, ell_weights = quad.l_rule()
    r_b = float(r[-1])

    clearance = np.sqrt(2.0 * np.maximum(rows.max(axis=1) - rows[:, -1], 0.0))
    hi = -np.minimum(clearance, quad.w_max)
    lo = np.full_like(hi, -quad.w_max)
    cuts = [lo, *(np.clip(-edge, lo, hi) for edge in quad.w_breaks), hi]
    edges = np.sort(np.stack(cuts, axis=-1), axis=-1)
    width = np.diff(edges, axis=-1)
    tau, omega = quad.segment_rule()
    w = edges[:, :-1, None] + width[:, :, None] * tau
    samples = f(w, ell[:, None, None]) * w
    per_l = np.einsum("js,jsm,m->j", width, samples, omega)
    flux = float(per_l @ (r_b * ell_weights))

    prefactor = 1.0 if species is Species.ION else 1.0 / math.sqrt(mu)
    return phi.with_values(prefactor * flux / r)


# ============================================================================
# REGULARITY
# ============================================================================


def holder_ratios(
    species: Species,
    r: float,
    nu0: Sequence[float],
    deltas: Sequence[float],
    exponent: float,
    params: ParameterSet,
    f: BoundaryDistribution,
    quad: QuadratureSpec,
) -> FloatArray:
    """
    Empirical Hölder ratios max_ν |g(ν + δ, r) - g(ν, r)| / δ^exponent, one per δ.
    """
    base = np.asarray(nu0, dtype=float)
    steps = np.asarray(deltas, dtype=float)
    g0 = density_g(species, base, r, params, f, quad)
    shifted = density_g(species, base[None, :] + steps[:, None], r, params, f, quad)
    return np.max(np.abs(shifted - g0[None, :]), axis=1) / steps**exponent
