"""
Characteristics of the stationary Vlasov equations, used to check the kinetic densities.

In the rescaled frame both species move in the annulus 1 < r < r_b under

    dr/dt = v_r,   dv_r/dt = v_θ²/r - s·φ'(r),   dv_θ/dt = -v_r·v_θ/r

with s = +1 for ions and s = -1 for electrons. The energy v²/2 + s·φ and the
angular momentum L = r·v_θ are conserved. A phase-space point carries the
boundary distribution if its characteristic reaches the outer boundary
backwards in time, and zero otherwise.
"""

from __future__ import annotations

import enum
import functools
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import CubicSpline

from .distributions import BoundaryDistribution
from .envelope import RadialGridFunction, rho_tilde_rows
from .kinetics import Species
from .quadrature import composite_rule

logger = logging.getLogger(__name__)

type FloatArray = NDArray[np.float64]

_CHUNK = 4096


class PhaseClass(enum.StrEnum):
    FROM_OUTER_BOUNDARY = "from_outer_boundary"
    TRAPPED_OR_PROBE = "trapped_or_probe"


class ExitTag(enum.StrEnum):
    PROBE = "probe"
    OUTER = "outer"
    TIMEOUT = "timeout"


_EXIT_TAGS = (ExitTag.TIMEOUT, ExitTag.PROBE, ExitTag.OUTER)


@dataclass(frozen=True)
class PhasePoint:
    """Position and velocity of one particle."""

    r: float
    v_r: float
    v_theta: float
    species: Species = Species.ION

    def __post_init__(self) -> None:
        if not all(math.isfinite(c) for c in (self.r, self.v_r, self.v_theta)):
            raise ValueError(f"phase point must be finite, got {self}")
        if self.r < 1.0:
            raise ValueError(f"radius must be at least 1, got {self.r}")
        object.__setattr__(self, "species", Species(self.species))

    @property
    def angular_momentum(self) -> float:
        return self.r * self.v_theta

    def reversed(self) -> PhasePoint:
        """Same point with both velocity components flipped."""
        return PhasePoint(self.r, -self.v_r, -self.v_theta, self.species)


# ============================================================================
# POTENTIAL
# ============================================================================


@dataclass(frozen=True, eq=False)
class PotentialField:
    """
    Potential referenced to the outer boundary, φ(r_b) = 0.

    Trajectories use a cubic spline through the node values so that force and
    potential are consistent; membership tests use the piecewise-linear
    interpolant, which is what the density quadrature sees.
    """

    nodes: FloatArray
    values: FloatArray

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or nodes.shape != values.shape:
            raise ValueError("potential needs matching 1-D nodes and values with at least 2 entries")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("potential nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values - values[-1])

    @classmethod
    def of(cls, phi: RadialGridFunction | PotentialField) -> PotentialField:
        if isinstance(phi, PotentialField):
            return phi
        return cls(phi.nodes, phi.base)

    @property
    def r_b(self) -> float:
        return float(self.nodes[-1])

    @functools.cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(self.nodes, self.values)

    @functools.cached_property
    def _gradient(self) -> CubicSpline:
        return self._spline.derivative()

    def potential(self, r: ArrayLike) -> FloatArray:
        return np.asarray(self._spline(r), dtype=float)

    def gradient(self, r: ArrayLike) -> FloatArray:
        return np.asarray(self._gradient(r), dtype=float)

    def interpolated(self, r: ArrayLike) -> FloatArray:
        return np.interp(r, self.nodes, self.values)

    def effective_rows(self, L: ArrayLike, sign: int) -> FloatArray:
        """L²/2r² + s·φ on the nodes, one row per angular momentum."""
        L_ = np.asarray(L, dtype=float).reshape(-1, 1)
        return L_ * L_ / (2.0 * self.nodes * self.nodes) + sign * self.values

    def effective_at(self, r: ArrayLike, L: ArrayLike, sign: int) -> FloatArray:
        """U_L(r) interpolated linearly between nodes, consistent with effective_rows."""
        L_ = np.asarray(L, dtype=float)
        inverse_square = np.interp(r, self.nodes, 1.0 / (self.nodes * self.nodes))
        return 0.5 * L_ * L_ * inverse_square + sign * self.interpolated(r)

    def energy(self, r: ArrayLike, v_r: ArrayLike, v_theta: ArrayLike, sign: int) -> FloatArray:
        r_, vr, vt = (np.asarray(a, dtype=float) for a in (r, v_r, v_theta))
        return 0.5 * (vr * vr + vt * vt) + sign * self.potential(r_)


# ============================================================================
# TRAJECTORIES
# ============================================================================


def _vector_field(state: FloatArray, field: PotentialField, sign: int) -> FloatArray:
    r, vr, vt = state[0], state[1], state[2]
    return np.stack((vr, vt * vt / r - sign * field.gradient(r), -vr * vt / r))


def _rk4(state: FloatArray, h: float, field: PotentialField, sign: int) -> FloatArray:
    k1 = _vector_field(state, field, sign)
    k2 = _vector_field(state + 0.5 * h * k1, field, sign)
    k3 = _vector_field(state + 0.5 * h * k2, field, sign)
    k4 = _vector_field(state + h * k3, field, sign)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled characteristic with its invariants and exit tag."""

    t: FloatArray
    r: FloatArray
    v_r: FloatArray
    v_theta: FloatArray
    energy: FloatArray
    exit: ExitTag
    species: Species
    steps: int

    @property
    def angular_momentum(self) -> FloatArray:
        return self.r * self.v_theta

    @property
    def duration(self) -> float:
        return float(self.t[-1])

    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def momentum_drift(self) -> float:
        L = self.angular_momentum
        return float(np.max(np.abs(L - L[0])))

    def to_columns(self) -> dict[str, FloatArray]:
        """Columns t, r, v_r, v_theta, e, L for the trajectory table."""
        return {
            "t": self.t,
            "r": self.r,
            "v_r": self.v_r,
            "v_theta": self.v_theta,
            "e": self.energy,
            "L": self.angular_momentum,
        }


def integrate_characteristic(
    p0: PhasePoint,
    phi: RadialGridFunction | PotentialField,
    dt: float,
    t_max: float,
    *,
    min_step_fraction: float = 2.0**-20,
) -> Trajectory:
    """
    Integrate forward in time with RK4 until the particle leaves (1, r_b) or t_max.

    A step that would leave the annulus is halved until it is shorter than
    dt·min_step_fraction; the crossing is then placed on the boundary by linear
    interpolation within that last short step.

    Raises:
        ValueError: If dt or t_max is not positive or p0 lies outside [1, r_b].
    """
    if dt <= 0.0 or t_max <= 0.0:
        raise ValueError(f"dt and t_max must be positive, got dt={dt}, t_max={t_max}")
    field = PotentialField.of(phi)
    r_b = field.r_b
    if p0.r > r_b:
        raise ValueError(f"radius {p0.r} outside [1, {r_b}]")
    sign = p0.species.sign

    state = np.array([p0.r, p0.v_r, p0.v_theta], dtype=float)
    times, states = [0.0], [state]
    t, h, floor = 0.0, dt, dt * min_step_fraction
    steps = 0
    tag = ExitTag.TIMEOUT
    while t < t_max:
        step = min(h, t_max - t)
        trial = _rk4(state, step, field, sign)
        steps += 1
        if 1.0 < trial[0] < r_b:
            state, t, h = trial, t + step, dt
            times.append(t)
            states.append(state)
            continue
        if step > floor:
            h = 0.5 * step
            continue
        boundary = 1.0 if trial[0] <= 1.0 else r_b
        frac = (boundary - state[0]) / (trial[0] - state[0])
        state = state + frac * (trial - state)
        state[0] = boundary
        t += frac * step
        times.append(t)
        states.append(state)
        tag = ExitTag.PROBE if boundary == 1.0 else ExitTag.OUTER
        break

    path = np.array(states)
    logger.debug("characteristic from r=%g: %s after t=%.6g (%d steps)", p0.r, tag, t, steps)
    return Trajectory(
        t=np.array(times),
        r=path[:, 0],
        v_r=path[:, 1],
        v_theta=path[:, 2],
        energy=field.energy(path[:, 0], path[:, 1], path[:, 2], sign),
        exit=tag,
        species=p0.species,
        steps=steps,
    )


@dataclass(frozen=True, eq=False)
class BatchExit:
    """Exit side and time of many characteristics integrated together."""

    codes: NDArray[np.int8]
    times: FloatArray

    @property
    def tags(self) -> list[ExitTag]:
        return [_EXIT_TAGS[c] for c in self.codes]

    def reached(self, tag: ExitTag) -> NDArray[np.bool_]:
        return self.codes == _EXIT_TAGS.index(tag)


def integrate_many(
    r: ArrayLike,
    v_r: ArrayLike,
    v_theta: ArrayLike,
    phi: RadialGridFunction | PotentialField,
    species: Species,
    dt: float,
    t_max: float,
) -> BatchExit:
    """
    Fixed-step RK4 for many points at once.

    Exit times are interpolated linearly inside the crossing step.
    """
    field = PotentialField.of(phi)
    sign = Species(species).sign
    r_b = field.r_b
    state = np.stack([np.asarray(a, dtype=float).ravel() for a in (r, v_r, v_theta)])
    n = state.shape[1]
    codes = np.zeros(n, dtype=np.int8)
    times = np.full(n, t_max)
    active = np.ones(n, dtype=bool)
    t = 0.0
    while t < t_max and np.any(active):
        step = min(dt, t_max - t)
        idx = np.flatnonzero(active)
        old = state[:, idx]
        new = _rk4(old, step, field, sign)
        probe, outer = new[0] <= 1.0, new[0] >= r_b
        left = probe | outer
        if np.any(left):
            boundary = np.where(probe, 1.0, r_b)[left]
            frac = (boundary - old[0, left]) / (new[0, left] - old[0, left])
            gone = idx[left]
            times[gone] = t + frac * step
            codes[gone] = np.where(probe[left], 1, 2)
            active[gone] = False
        state[:, idx[~left]] = new[:, ~left]
        t += step
    return BatchExit(codes, times)


def trace_origin(
    r: ArrayLike,
    v_r: ArrayLike,
    v_theta: ArrayLike,
    phi: RadialGridFunction | PotentialField,
    species: Species,
    *,
    dt: float = 1e-2,
    t_max: float = 50.0,
) -> NDArray[np.bool_]:
    """True where the backward characteristic reaches the outer boundary."""
    v_r_, v_theta_ = np.asarray(v_r, dtype=float), np.asarray(v_theta, dtype=float)
    batch = integrate_many(r, -v_r_, -v_theta_, phi, species, dt, t_max)
    return batch.reached(ExitTag.OUTER)


# ============================================================================
# CLASSIFICATION AND PULLBACK
# ============================================================================


def _classify_chunk(
    r: FloatArray, vr: FloatArray, vt: FloatArray, field: PotentialField, sign: int
) -> NDArray[np.bool_]:
    L = r * vt
    rows = field.effective_rows(L, sign)
    top = rows.max(axis=1)
    e = 0.5 * vr * vr + field.effective_at(r, L, sign)
    incoming = (vr < 0.0) & (e > top)
    reflected = (e < top) & (e >= rows[:, -1])
    if np.any(reflected):
        sel = np.flatnonzero(reflected)
        barrier = rho_tilde_rows(field.nodes, rows[sel], e[sel, None])[:, 0]
        reflected[sel] = r[sel] > barrier
    return incoming | reflected


def classify_many(
    r: ArrayLike,
    v_r: ArrayLike,
    v_theta: ArrayLike,
    phi: RadialGridFunction | PotentialField,
    species: Species,
) -> NDArray[np.bool_]:
    """
    True where the point is connected to the outer boundary.

    With radial energy e = v_r²/2 + U_L(r) the point is connected when
    v_r < 0 and e > max U_L (incoming above the barrier) or when
    U_L(r_b) ≤ e < max U_L and r > ρ̃[U_L](e) (reflected before the barrier).
    Points on a threshold count as trapped.
    """
    field = PotentialField.of(phi)
    sign = Species(species).sign
    rr, vr, vt = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (r, v_r, v_theta)))
    shape = rr.shape
    rr, vr, vt = rr.ravel(), vr.ravel(), vt.ravel()
    out = np.empty(rr.size, dtype=bool)
    for start in range(0, rr.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        out[sl] = _classify_chunk(rr[sl], vr[sl], vt[sl], field, sign)
    return out.reshape(shape)


def classify(
    p: PhasePoint, phi: RadialGridFunction | PotentialField, species: Species | None = None
) -> PhaseClass:
    """Phase-space class of one point; species defaults to the point's own."""
    connected = classify_many(p.r, p.v_r, p.v_theta, phi, p.species if species is None else species)
    return PhaseClass.FROM_OUTER_BOUNDARY if bool(connected) else PhaseClass.TRAPPED_OR_PROBE


def distribution_values(
    r: ArrayLike,
    v_r: ArrayLike,
    v_theta: ArrayLike,
    phi: RadialGridFunction | PotentialField,
    species: Species,
    f_b: BoundaryDistribution,
    *,
    trapped_value: float = 0.0,
) -> FloatArray:
    """
    f at many points: the boundary value carried along the characteristic.

    Connected points get f_b(-√(v_r² + 2(U_L(r) - U_L(r_b))), L/r_b);
    the rest get trapped_value (zero for the physical solution).
    """
    field = PotentialField.of(phi)
    sign = Species(species).sign
    r_b = field.r_b
    rr, vr, vt = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (r, v_r, v_theta)))
    connected = classify_many(rr, vr, vt, field, species)
    L = rr * vt
    lift = vr * vr + 2.0 * field.effective_at(rr, L, sign) - L * L / (r_b * r_b)
    w = -np.sqrt(np.maximum(lift, 0.0))
    values = f_b(w, L / r_b)
    return np.where(connected, values, trapped_value)


def evaluate_f(
    p: PhasePoint,
    phi: RadialGridFunction | PotentialField,
    species: Species,
    f_b: BoundaryDistribution,
) -> float:
    return float(distribution_values(p.r, p.v_r, p.v_theta, phi, species, f_b))


# ============================================================================
# MONTE-CARLO DENSITY
# ============================================================================


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Estimate with the standard error of plain uniform sampling (an upper bound for jittered samples)."""

    value: float
    stderr: float
    n_samples: int

    def agrees_with(self, reference: float, *, rel: float = 0.02, sigmas: float = 3.0, extra: float = 0.0) -> bool:
        """Within rel of reference or within sigmas combined standard errors."""
        gap = abs(self.value - reference)
        combined = math.hypot(self.stderr, extra)
        return gap <= rel * abs(reference) or gap <= sigmas * combined


def _jittered(rng: np.random.Generator, lo: Sequence[float], hi: Sequence[float], n_samples: int) -> FloatArray:
    """One uniform sample per cell of a regular grid over the box, shape (dim, k**dim)."""
    dim = len(lo)
    k = max(1, math.ceil(n_samples ** (1.0 / dim) - 1e-9))
    cells = np.stack(np.meshgrid(*([np.arange(k)] * dim), indexing="ij")).reshape(dim, -1)
    u = (cells + rng.random(cells.shape)) / k
    lo_, hi_ = np.asarray(lo, dtype=float)[:, None], np.asarray(hi, dtype=float)[:, None]
    return lo_ + (hi_ - lo_) * u


def _estimate(values: FloatArray, volume: float) -> MonteCarloEstimate:
    n = values.size
    mean = float(np.mean(values))
    spread = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return MonteCarloEstimate(volume * mean, volume * spread / math.sqrt(n), n)


def velocity_box(r: float, field: PotentialField, f_b: BoundaryDistribution) -> tuple[float, float]:
    """Half-widths (V_r, V_θ) of a velocity box containing the support of f at radius r."""
    r_b = field.r_b
    v_theta = r_b * f_b.l_max / r
    swing = 2.0 * float(np.max(np.abs(field.values)))
    v_r = math.sqrt(f_b.w_max**2 + f_b.l_max**2 + swing)
    return v_r, v_theta


def mc_density(
    r: float,
    phi: RadialGridFunction | PotentialField,
    species: Species,
    f_b: BoundaryDistribution,
    n_samples: int,
    seed: int,
) -> MonteCarloEstimate:
    """
    n(r) = ∬ f(r, v_r, v_θ) dv_r dv_θ by jittered sampling of a velocity box.

    Raises:
        ValueError: If r lies outside [1, r_b] or n_samples < 2.
    """
    field = PotentialField.of(phi)
    if not 1.0 <= r <= field.r_b:
        raise ValueError(f"radius {r} outside [1, {field.r_b}]")
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if f_b.is_zero:
        return MonteCarloEstimate(0.0, 0.0, n_samples)
    half_r, half_t = velocity_box(r, field, f_b)
    rng = np.random.default_rng(seed)
    vr, vt = _jittered(rng, (-half_r, -half_t), (half_r, half_t), n_samples)
    values = np.concatenate(
        [
            distribution_values(r, vr[s : s + _CHUNK * 16], vt[s : s + _CHUNK * 16], field, species, f_b)
            for s in range(0, vr.size, _CHUNK * 16)
        ]
    )
    estimate = _estimate(values, 4.0 * half_r * half_t)
    logger.debug("mc density at r=%g: %.6g ± %.2g (%d samples)", r, estimate.value, estimate.stderr, values.size)
    return estimate


# ============================================================================
# WEAK FORMULATION
# ============================================================================


def _bump(s: FloatArray) -> FloatArray:
    inside = np.abs(s) < 1.0
    return np.where(inside, (1.0 - s * s) ** 3, 0.0)


def _bump_slope(s: FloatArray) -> FloatArray:
    inside = np.abs(s) < 1.0
    return np.where(inside, -6.0 * s * (1.0 - s * s) ** 2, 0.0)


@dataclass(frozen=True)
class BumpTestFunction:
    """
    Product of (1 - s²)³ bumps in r, v_r and v_θ.

    It vanishes on the outgoing boundary when its r-support stays away from the
    probe or its v_r-support is non-negative there, and likewise at r_b with a
    non-positive v_r-support.
    """

    r_center: float
    r_radius: float
    vr_center: float
    vr_radius: float
    vt_center: float
    vt_radius: float

    def __post_init__(self) -> None:
        if min(self.r_radius, self.vr_radius, self.vt_radius) <= 0.0:
            raise ValueError("bump radii must be positive")

    def _scaled(self, r: FloatArray, vr: FloatArray, vt: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray]:
        return (
            (r - self.r_center) / self.r_radius,
            (vr - self.vr_center) / self.vr_radius,
            (vt - self.vt_center) / self.vt_radius,
        )

    def __call__(self, r: ArrayLike, v_r: ArrayLike, v_theta: ArrayLike) -> FloatArray:
        a, b, c = self._scaled(*(np.asarray(x, dtype=float) for x in (r, v_r, v_theta)))
        return _bump(a) * _bump(b) * _bump(c)

    def transport(
        self, r: ArrayLike, v_r: ArrayLike, v_theta: ArrayLike, field: PotentialField, sign: int
    ) -> FloatArray:
        """Derivative of the test function along the characteristic flow."""
        rr, vr, vt = (np.asarray(x, dtype=float) for x in (r, v_r, v_theta))
        a, b, c = self._scaled(rr, vr, vt)
        ba, bb, bc = _bump(a), _bump(b), _bump(c)
        d_r = _bump_slope(a) / self.r_radius * bb * bc
        d_vr = ba * _bump_slope(b) / self.vr_radius * bc
        d_vt = ba * bb * _bump_slope(c) / self.vt_radius
        accel = vt * vt / rr - sign * field.gradient(rr)
        return vr * d_r + accel * d_vr - (vr * vt / rr) * d_vt

    def vanishes_on_outgoing(self, r_b: float) -> bool:
        touches_probe = self.r_center - self.r_radius < 1.0
        touches_outer = self.r_center + self.r_radius > r_b
        probe_ok = not touches_probe or self.vr_center - self.vr_radius >= 0.0
        outer_ok = not touches_outer or self.vr_center + self.vr_radius <= 0.0
        return probe_ok and outer_ok

    def support(self, r_b: float) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
        lo = (max(1.0, self.r_center - self.r_radius), self.vr_center - self.vr_radius, self.vt_center - self.vt_radius)
        hi = (min(r_b, self.r_center + self.r_radius), self.vr_center + self.vr_radius, self.vt_center + self.vt_radius)
        return lo, hi


def bump_family(r_b: float, count: int = 10, seed: int = 0) -> list[BumpTestFunction]:
    """Random bumps, half of them reaching the outer boundary with incoming v_r."""
    rng = np.random.default_rng(seed)
    width = r_b - 1.0
    family = []
    for i in range(count):
        vt_center, vt_radius = rng.uniform(-0.5, 0.5), rng.uniform(0.3, 0.8)
        if i % 2 == 0:
            r_radius = rng.uniform(0.2, 0.5) * width
            vr_radius = rng.uniform(0.2, 0.6)
            family.append(
                BumpTestFunction(r_b, r_radius, -vr_radius - rng.uniform(0.0, 0.3), vr_radius, vt_center, vt_radius)
            )
        else:
            r_radius = rng.uniform(0.1, 0.3) * width
            r_center = rng.uniform(1.0 + r_radius, r_b - r_radius)
            family.append(
                BumpTestFunction(r_center, r_radius, rng.uniform(-0.5, 0.5), rng.uniform(0.3, 0.8), vt_center, vt_radius)
            )
    return family


@dataclass(frozen=True)
class WeakFormResult:
    """Largest weak-form mismatch over a test family and its Monte-Carlo error."""

    value: float
    stderr: float
    volume_terms: tuple[float, ...]
    boundary_terms: tuple[float, ...]
    stderrs: tuple[float, ...]

    @property
    def sigmas(self) -> float:
        return self.value / self.stderr if self.stderr > 0.0 else (0.0 if self.value == 0.0 else math.inf)


def _boundary_term(test: BumpTestFunction, r_b: float, f_b: BoundaryDistribution) -> float:
    """r_b ∬_{v_r<0} v_r f_b(v_r, v_θ) ψ(r_b, v_r, v_θ) dv_r dv_θ by composite Gauss–Legendre."""
    if test.r_center + test.r_radius <= r_b or f_b.is_zero:
        return 0.0
    vr_lo, vr_hi = test.vr_center - test.vr_radius, min(test.vr_center + test.vr_radius, 0.0)
    vt_lo, vt_hi = test.vt_center - test.vt_radius, test.vt_center + test.vt_radius
    if vr_hi <= vr_lo:
        return 0.0
    vr_breaks = [vr_lo, vr_hi, *(-b for b in f_b.w_breaks if vr_lo < -b < vr_hi)]
    vt_breaks = [vt_lo, vt_hi, *(s * b for b in f_b.l_breaks for s in (-1.0, 1.0) if vt_lo < s * b < vt_hi)]
    vr, wr = composite_rule(vr_breaks, 4, 16)
    vt, wt = composite_rule(vt_breaks, 4, 16)
    VR, VT = np.meshgrid(vr, vt, indexing="ij")
    integrand = VR * f_b(VR, VT) * test(r_b, VR, VT)
    return float(r_b * (wr @ integrand @ wt))


def weak_form_residual(
    phi: RadialGridFunction | PotentialField,
    species: Species,
    f_b: BoundaryDistribution,
    test_set: Sequence[BumpTestFunction],
    n_samples: int = 100_000,
    seed: int = 0,
    *,
    trapped_value: float = 0.0,
) -> WeakFormResult:
    """
    max over the test family of |∭ r·f·(X·∇ψ) - r_b ∬_{v_r<0} v_r f_b ψ|.

    X is the characteristic vector field; the volume term is sampled, the
    boundary term is integrated by quadrature. trapped_value sets f on the
    points not connected to the outer boundary.

    Raises:
        ValueError: If a test function does not vanish on the outgoing boundary.
    """
    field = PotentialField.of(phi)
    r_b = field.r_b
    sign = Species(species).sign
    if not test_set:
        raise ValueError("test_set must not be empty")
    for test in test_set:
        if not test.vanishes_on_outgoing(r_b):
            raise ValueError(f"{test} does not vanish on the outgoing boundary")

    rng = np.random.default_rng(seed)
    volumes, boundaries, errors = [], [], []
    for test in test_set:
        lo, hi = test.support(r_b)
        volume = float(np.prod(np.subtract(hi, lo)))
        if f_b.is_zero and trapped_value == 0.0:
            volumes.append(0.0)
            errors.append(0.0)
        else:
            rr, vr, vt = _jittered(rng, lo, hi, n_samples)
            f = distribution_values(rr, vr, vt, field, species, f_b, trapped_value=trapped_value)
            estimate = _estimate(rr * f * test.transport(rr, vr, vt, field, sign), volume)
            volumes.append(estimate.value)
            errors.append(estimate.stderr)
        boundaries.append(_boundary_term(test, r_b, f_b))

    gaps = np.abs(np.subtract(volumes, boundaries))
    worst = int(np.argmax(gaps))
    logger.info("weak-form residual %.3e ± %.2e over %d test functions", gaps[worst], errors[worst], len(test_set))
    return WeakFormResult(float(gaps[worst]), errors[worst], tuple(volumes), tuple(boundaries), tuple(errors))


# ============================================================================
# SOLUTION CHECK
# ============================================================================


def _substream(seed: int, *key: int) -> int:
    """Independent child seed of (seed, key...)."""
    return int(np.random.SeedSequence([seed, *key]).generate_state(1)[0])


@dataclass(frozen=True)
class DensityCheck:
    species: Species
    r: float
    reference: float
    estimate: MonteCarloEstimate

    @property
    def agrees(self) -> bool:
        return self.estimate.agrees_with(self.reference)

    def to_dict(self) -> dict[str, Any]:
        return {
            "species": str(self.species),
            "r": self.r,
            "reference": self.reference,
            "estimate": self.estimate.value,
            "stderr": self.estimate.stderr,
            "agrees": self.agrees,
        }


@dataclass(frozen=True)
class SolutionCheck:
    """Monte-Carlo densities and weak-form residuals of one solved potential."""

    seed: int
    densities: tuple[DensityCheck, ...]
    weak_forms: dict[Species, WeakFormResult]

    @property
    def passed(self) -> bool:
        weak_ok = all(w.value <= 3.0 * w.stderr for w in self.weak_forms.values())
        return weak_ok and all(d.agrees for d in self.densities)

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "passed": self.passed,
            "densities": [d.to_dict() for d in self.densities],
            "weak_form": {
                str(s): {"value": w.value, "stderr": w.stderr, "sigmas": w.sigmas} for s, w in self.weak_forms.items()
            },
        }


def check_solution(
    phi: RadialGridFunction | PotentialField,
    species_data: Mapping[Species, tuple[BoundaryDistribution, RadialGridFunction]],
    *,
    n_radii: int = 5,
    n_samples: int = 1_000_000,
    weak_samples: int = 100_000,
    seed: int = 0,
) -> SolutionCheck:
    """
    Verify a solved potential against the characteristics.

    For every species with a non-zero boundary distribution the density n(r)
    is compared with a Monte-Carlo estimate at n_radii interior nodes, and the
    weak transport residual is evaluated on bump_family(r_b, seed=seed). Every
    random stream is derived from seed, so equal seeds give equal checks.

    Args:
        phi: Solved potential.
        species_data: Boundary distribution and density n(r) per species.

    Raises:
        ValueError: If n_radii < 1.
    """
    if n_radii < 1:
        raise ValueError(f"n_radii must be at least 1, got {n_radii}")
    field = PotentialField.of(phi)
    tests = bump_family(field.r_b, seed=seed)
    densities: list[DensityCheck] = []
    weak_forms: dict[Species, WeakFormResult] = {}
    for index, (species, (f_b, density)) in enumerate(species_data.items()):
        species = Species(species)
        if f_b.is_zero:
            continue
        nodes = np.unique(np.linspace(0, density.nodes.size - 1, n_radii + 2).round().astype(int)[1:-1])
        for k in nodes:
            r = float(density.nodes[k])
            estimate = mc_density(r, field, species, f_b, n_samples, _substream(seed, index, int(k)))
            densities.append(DensityCheck(species, r, float(density.values[k]), estimate))
        weak_forms[species] = weak_form_residual(
            field, species, f_b, tests, weak_samples, _substream(seed, index, density.nodes.size)
        )
    check = SolutionCheck(seed, tuple(densities), weak_forms)
    logger.info(
        "solution check (seed %d): %d densities, %s", seed, len(densities), "passed" if check.passed else "FAILED"
    )
    return check
