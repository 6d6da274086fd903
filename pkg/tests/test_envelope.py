"""Tests for grid functions, the dagger transform and barrier radii."""

import numpy as np
import pytest

from vpprobe.envelope import (
    Interpolation,
    RadialGridFunction,
    barrier_height,
    dagger,
    effective_potential,
    rho_tilde,
    rho_tilde_rows,
    suffix_max,
    suffix_max_at,
)


def random_profiles(count, n_nodes=41, seed=7):
    """Random potentials on [1, 2]: smooth trend plus node noise."""
    rng = np.random.default_rng(seed)
    r = np.linspace(1.0, 2.0, n_nodes)
    for _ in range(count):
        trend = rng.normal() * (r - 2.0) + rng.normal() * np.sin(3.0 * r)
        yield RadialGridFunction(r, trend + 0.3 * rng.normal(size=n_nodes))


# ============================================================================
# GRID FUNCTION
# ============================================================================


def test_uniform_grid():
    """Test uniform grid construction with and without a callable."""
    f = RadialGridFunction.uniform(1.0, 2.0, 11, lambda r: r**2)

    assert len(f) == 11
    assert f.start == 1.0
    assert f.end == 2.0
    assert f.values[-1] == pytest.approx(4.0)
    assert RadialGridFunction.uniform(0.0, 1.0, 3).values.tolist() == [0.0, 0.0, 0.0]


def test_linear_interpolation_between_nodes():
    """Test that LINEAR functions interpolate node values."""
    f = RadialGridFunction(np.array([1.0, 2.0]), np.array([0.0, 2.0]))

    assert float(f(1.25)) == pytest.approx(0.5)
    assert f.slope([1.0, 1.5, 2.0]).tolist() == [2.0, 2.0, 2.0]


def test_nodes_must_increase():
    """Test that non-increasing nodes are rejected."""
    with pytest.raises(ValueError, match="strictly increasing"):
        RadialGridFunction(np.array([1.0, 1.0, 2.0]), np.zeros(3))


def test_values_must_be_finite():
    """Test that NaN values are rejected."""
    with pytest.raises(ValueError, match="finite"):
        RadialGridFunction(np.array([1.0, 2.0]), np.array([0.0, np.nan]))


def test_shape_mismatch():
    """Test that values must match the nodes."""
    with pytest.raises(ValueError, match="does not match"):
        RadialGridFunction(np.array([1.0, 2.0, 3.0]), np.zeros(2))


def test_arrays_are_read_only():
    """Test that node and value arrays cannot be modified in place."""
    f = RadialGridFunction.uniform(1.0, 2.0, 5)

    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_source_only_for_envelopes():
    """Test that a LINEAR function refuses a source profile."""
    with pytest.raises(ValueError, match="source"):
        RadialGridFunction(np.array([1.0, 2.0]), np.zeros(2), source=np.zeros(2))


def test_sup_distance_needs_shared_grid():
    """Test that sup_distance compares only functions on the same nodes."""
    a = RadialGridFunction.uniform(1.0, 2.0, 5, lambda r: r)
    b = RadialGridFunction.uniform(1.0, 2.0, 5, lambda r: r + 0.5)

    assert a.sup_distance(b) == pytest.approx(0.5)
    with pytest.raises(ValueError, match="same nodes"):
        a.sup_distance(RadialGridFunction.uniform(1.0, 2.0, 6))


# ============================================================================
# DAGGER
# ============================================================================


def test_suffix_max():
    """Test the running maximum from the right."""
    assert suffix_max([1.0, 3.0, 2.0, 0.0, 1.0]).tolist() == [3.0, 3.0, 2.0, 1.0, 1.0]


def test_dagger_of_bump():
    """Test dagger on a single bump."""
    bump = RadialGridFunction.uniform(1.0, 2.0, 5, lambda r: 1.0 - (r - 1.5) ** 2)
    env = dagger(bump)

    assert env.interpolation is Interpolation.ENVELOPE
    assert env.values.tolist() == [1.0, 1.0, 1.0, 0.9375, 0.75]


def test_dagger_majorant_and_monotone():
    """Test that dagger is a non-increasing majorant on 1000 random profiles."""
    for f in random_profiles(1000):
        env = dagger(f)
        fine = np.linspace(f.start, f.end, 397)

        assert env.is_non_increasing()
        assert np.all(env.values >= f.values)
        assert np.all(env(fine) >= f(fine) - 1e-14)
        assert np.all(np.diff(env(fine)) <= 1e-14)


def test_dagger_is_smallest():
    """Test that dagger leaves non-increasing profiles unchanged."""
    for f in random_profiles(200):
        sorted_desc = f.with_values(np.sort(f.values)[::-1])
        env = dagger(sorted_desc)

        np.testing.assert_array_equal(env.values, sorted_desc.values)
        fine = np.linspace(f.start, f.end, 211)
        np.testing.assert_allclose(env(fine), sorted_desc(fine), rtol=0.0, atol=1e-14)


def test_dagger_idempotent():
    """Test that applying dagger twice changes nothing."""
    for f in random_profiles(200):
        once = dagger(f)
        twice = dagger(once)

        np.testing.assert_array_equal(once.values, twice.values)
        np.testing.assert_array_equal(once.base, twice.base)


def test_dagger_keeps_maximum_and_outer_value():
    """Test that dagger preserves the maximum and the outer boundary value."""
    for f in random_profiles(200):
        env = dagger(f)

        assert env.values[0] == barrier_height(f)
        assert env.values[-1] == f.values[-1]


def test_dagger_is_lipschitz_in_sup_norm():
    """Test ||f† - g†|| <= ||f - g|| on random pairs."""
    profiles = list(random_profiles(400))
    for f, g in zip(profiles[::2], profiles[1::2], strict=True):
        assert dagger(f).sup_distance(dagger(g)) <= f.sup_distance(g) + 1e-14


def test_suffix_max_at_matches_dagger():
    """Test batch envelope evaluation against dagger."""
    profiles = list(random_profiles(20))
    nodes = profiles[0].nodes
    rows = np.stack([p.values for p in profiles])
    r = np.linspace(1.0, 2.0, 123)

    batch = suffix_max_at(nodes, rows, r)
    for row, profile in zip(batch, profiles, strict=True):
        np.testing.assert_array_equal(row, dagger(profile)(r))


# ============================================================================
# BARRIER RADIUS
# ============================================================================


def test_rho_tilde_monotone_profile():
    """Test that a decreasing profile gives the crossing radius."""
    U = RadialGridFunction.uniform(1.0, 2.0, 101, lambda r: 1.0 / r)

    assert rho_tilde(U, 2.0) == 1.0
    assert rho_tilde(U, 0.8) == pytest.approx(1.25, abs=1e-3)
    assert rho_tilde(U, 0.5) == pytest.approx(2.0, abs=1e-12)


def test_rho_tilde_below_outer_value():
    """Test that a level below f(r_b) is rejected."""
    U = RadialGridFunction.uniform(1.0, 2.0, 11, lambda r: 1.0 / r)

    with pytest.raises(ValueError, match="below the outer value"):
        rho_tilde(U, 0.4)


def test_rho_tilde_defining_property():
    """Test that f <= e right of rho_tilde and f > e just left of it."""
    rng = np.random.default_rng(3)
    for f in random_profiles(300):
        e = f.values[-1] + rng.uniform(0.0, 1.5)
        a = rho_tilde(f, e)
        right = np.linspace(a, f.end, 101)

        assert np.all(f(right) <= e + 1e-12)
        if a > f.start:
            assert float(f(a - 1e-9)) > e


def test_rho_tilde_unchanged_by_dagger():
    """Test rho_tilde(f) == rho_tilde(dagger(f))."""
    rng = np.random.default_rng(5)
    for f in random_profiles(300):
        e = f.values[-1] + rng.uniform(0.0, 1.0)

        assert rho_tilde(f, e) == rho_tilde(dagger(f), e)


def test_rho_tilde_non_increasing_in_level():
    """Test that raising the level moves the barrier inward."""
    for f in random_profiles(100):
        levels = f.values[-1] + np.linspace(0.0, 2.0, 25)
        radii = [rho_tilde(f, e) for e in levels]

        assert np.all(np.diff(radii) <= 1e-14)


def test_rho_tilde_rows_matches_scalar():
    """Test the batch barrier radius against rho_tilde."""
    profiles = list(random_profiles(10))
    rows = np.stack([p.values for p in profiles])
    levels = rows[:, -1:] + np.linspace(0.0, 1.0, 7)[None, :]

    batch = rho_tilde_rows(profiles[0].nodes, rows, levels)
    for i, profile in enumerate(profiles):
        expected = [rho_tilde(profile, e) for e in levels[i]]
        np.testing.assert_array_equal(batch[i], expected)


# ============================================================================
# EFFECTIVE POTENTIAL
# ============================================================================


def test_effective_potential():
    """Test U_L and V_L on the nodes."""
    phi = RadialGridFunction.uniform(1.0, 2.0, 5, lambda r: 2.0 - r)
    r = phi.nodes

    np.testing.assert_allclose(effective_potential(phi, 1.0, 1).values, 0.5 / r**2 + 2.0 - r)
    np.testing.assert_allclose(effective_potential(phi, 1.0, -1).values, 0.5 / r**2 - 2.0 + r)


def test_effective_potential_sign():
    """Test that the species sign must be +1 or -1."""
    phi = RadialGridFunction.uniform(1.0, 2.0, 5)

    with pytest.raises(ValueError, match="species_sign"):
        effective_potential(phi, 1.0, 0)


def test_effective_potential_of_envelope():
    """Test that an envelope input keeps its envelope node values."""
    hump = RadialGridFunction.uniform(1.0, 2.0, 11, lambda r: -((r - 1.5) ** 2))
    env = dagger(hump)

    u = effective_potential(env, 0.0, 1).values

    np.testing.assert_allclose(u, env.values)
    np.testing.assert_allclose(u[:6], 0.0, atol=1e-15)
    assert u[6] == pytest.approx(-0.01)
