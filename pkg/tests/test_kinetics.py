"""Tests for the kinetic kernel, parameter sets, densities and currents."""

import math

import numpy as np
import pytest

from vpprobe.distributions import box, half_maxwellian, tabulated, witness, zero
from vpprobe.envelope import RadialGridFunction
from vpprobe.kinetics import (
    ParameterSet,
    QuadratureError,
    Species,
    beta,
    current_density,
    density_bound,
    density_g,
    direct_density,
    g_bound,
    gamma_kernel,
    gtilde,
    holder_ratios,
)
from vpprobe.quadrature import QuadratureSpec
from vpprobe.serialization import write_table

R_B = 2.0


def flat_potential(n_nodes=101, r_b=R_B):
    """phi = 0 on [1, r_b]."""
    return RadialGridFunction.uniform(1.0, r_b, n_nodes)


def vacuum_potential(phi_p, n_nodes=101, r_b=R_B):
    """phi_p (1 - log r / log r_b) on [1, r_b]."""
    return RadialGridFunction.uniform(1.0, r_b, n_nodes, lambda r: phi_p * (1.0 - np.log(r) / math.log(r_b)))


# ============================================================================
# SPECIES AND KERNEL
# ============================================================================


def test_species_parse():
    """Test parsing species names and signs."""
    assert Species.parse("ion") is Species.ION
    assert Species.parse("Electron") is Species.ELECTRON
    assert Species.parse(-1) is Species.ELECTRON
    assert Species.ION.sign == 1


def test_species_parse_unknown():
    """Test that unknown species names are rejected."""
    with pytest.raises(ValueError, match="unknown species"):
        Species.parse("positron")


def test_beta():
    """Test beta = 2 nu + L^2 (1/r^2 - 1/r_b^2)."""
    assert float(beta(1.0, 1.0, 1.0, r_b=2.0)) == pytest.approx(2.75)
    assert float(beta(0.0, 2.0, 3.0, r_b=2.0)) == 0.0


def test_gamma_kernel_support():
    """Test that Gamma vanishes for w >= 0 and w^2 <= beta."""
    w = np.array([-2.0, -1.0, -0.5, 0.0, 1.0])
    values = gamma_kernel(0.5, 2.0, w, 0.0, r_b=2.0)

    assert values[0] == pytest.approx(2.0 / math.sqrt(3.0))
    assert values[1:].tolist() == [0.0, 0.0, 0.0, 0.0]


def test_gamma_kernel_flat():
    """Test Gamma = 1 when beta = 0."""
    assert float(gamma_kernel(0.0, 2.0, -0.7, 0.0, r_b=2.0)) == pytest.approx(1.0, abs=1e-15)


# ============================================================================
# PARAMETERS
# ============================================================================


def test_parameters_from_flat_potential():
    """Test barrier heights of phi = 0: the centrifugal peak at the probe."""
    quad = QuadratureSpec.covering(box())
    params = ParameterSet.from_potential(flat_potential(), quad)

    np.testing.assert_allclose(params.max_u, 0.5 * params.l_nodes**2)
    np.testing.assert_allclose(params.max_v, 0.5 * params.l_nodes**2)
    assert params.barrier_i.shape == (params.l_nodes.size, quad.barrier_nodes)
    assert np.all((params.barrier_i >= 1.0) & (params.barrier_i <= R_B))


def test_open_parameters():
    """Test that open parameters put every barrier at the probe."""
    quad = QuadratureSpec.covering(box())
    params = ParameterSet.open(np.linspace(1.0, R_B, 11), quad, max_height=math.inf)

    assert np.all(params.barrier_i == 1.0)
    assert np.all(params.barrier_e == 1.0)
    assert np.all(np.isinf(params.max_u))


def test_gauge_invariance():
    """Test that adding a constant to phi changes nothing."""
    f = box()
    quad = QuadratureSpec.covering(f)
    phi = vacuum_potential(-1.0)
    shifted = phi.with_values(phi.values + 3.0)

    np.testing.assert_allclose(
        direct_density(Species.ION, phi, f, quad).values,
        direct_density(Species.ION, shifted, f, quad).values,
        rtol=1e-10,
    )


# ============================================================================
# DENSITIES
# ============================================================================


def test_zero_distribution_density():
    """Test that f = 0 gives zero density."""
    f = zero()
    quad = QuadratureSpec.covering(f)
    params = ParameterSet.from_potential(flat_potential(), quad)

    assert np.all(density_g(Species.ION, [0.0, 0.5], [1.2, 1.8], params, f, quad) == 0.0)


def test_outer_density_flat_potential():
    """Test g(r_b) for phi = 0 and the unit box against the closed form 2 (4 - 1/sqrt(3))."""
    f = box()
    quad = QuadratureSpec.covering(f)
    params = ParameterSet.from_potential(flat_potential(), quad)

    value = float(density_g(Species.ION, 0.0, R_B, params, f, quad))

    assert value == pytest.approx(R_B * (4.0 - 1.0 / math.sqrt(3.0)), rel=1e-3)


def test_doubling_weight_limits():
    """Test that height -inf counts every particle once and +inf counts it twice."""
    f = box()
    quad = QuadratureSpec.covering(f)
    radii = np.linspace(1.0, R_B, 11)
    once = ParameterSet.open(radii, quad, max_height=-math.inf)
    twice = ParameterSet.open(radii, quad, max_height=math.inf)
    mass = R_B * 2.0

    assert float(density_g(Species.ION, 0.0, R_B, once, f, quad)) == pytest.approx(mass, rel=1e-12)
    assert float(density_g(Species.ION, 0.0, R_B, twice, f, quad)) == pytest.approx(2.0 * mass, rel=1e-12)


def test_species_symmetry():
    """Test that ions in phi see what electrons see in -phi."""
    f = half_maxwellian()
    quad = QuadratureSpec.covering(f, sup_points=201)
    phi = vacuum_potential(-0.5)
    mirrored = phi.with_values(-phi.values)

    np.testing.assert_allclose(
        direct_density(Species.ION, phi, f, quad).values,
        direct_density(Species.ELECTRON, mirrored, f, quad).values,
        rtol=1e-12,
    )


def test_gtilde_vanishes_for_equal_species():
    """Test that identical species in phi = 0 are neutral."""
    f = box()
    quad = QuadratureSpec.covering(f)
    params = ParameterSet.from_potential(flat_potential(), quad)
    r = np.linspace(1.0, R_B, 7)

    np.testing.assert_allclose(gtilde(0.0, r, params, f, f, quad), 0.0, atol=1e-12)


def test_density_bound_box_value():
    """Test g_bound and the density ceiling of the unit box."""
    f = box()
    quad = QuadratureSpec.covering(f)

    assert g_bound(f, quad) == pytest.approx(12.0, abs=1e-10)
    assert density_bound(f, quad, R_B) == pytest.approx(48.0, abs=1e-9)


def bounded_family(name, tmp_path):
    if name == "tabulated":
        W, L = np.meshgrid(np.linspace(-2.0, 0.0, 21), np.linspace(0.0, 1.0, 11), indexing="ij")
        table = {"w": W.ravel(), "L": L.ravel(), "f": ((2.0 + W) * (1.0 - L**2)).ravel()}
        path = write_table(tmp_path / "f.csv", table)
        return tabulated(path, w_max=2.0, l_max=1.0, tail_tolerance=1e-12)
    if name == "witness":
        return witness(w_max=4.0, l_max=2.0)
    return {"box": box, "half_maxwellian": half_maxwellian}[name]()


@pytest.mark.parametrize("species", [Species.ION, Species.ELECTRON])
@pytest.mark.parametrize("name", ["box", "half_maxwellian", "witness", "tabulated"])
def test_density_bound(name, species, tmp_path):
    """Test 0 <= g <= 2 r_b g_bound on a 50 x 50 grid of (nu, r)."""
    f = bounded_family(name, tmp_path)
    quad = QuadratureSpec.covering(f, sup_points=501)
    params = ParameterSet.from_potential(vacuum_potential(-1.0), quad)
    nu, r = np.meshgrid(np.linspace(-2.0, 2.0, 50), np.linspace(1.0, R_B, 50), indexing="ij")

    g = density_g(species, nu, r, params, f, quad)

    assert g.shape == (50, 50)
    assert np.all(g >= 0.0)
    assert np.all(g <= density_bound(f, quad, R_B))


def test_substitution_agrees_with_plain_rule():
    """Test that the substitution and the plain rule agree where Gamma is bounded (beta < 0)."""
    f = half_maxwellian()
    quad = QuadratureSpec.covering(f, sup_points=201)
    plain = QuadratureSpec.covering(f, sup_points=201, substitution=False, w_panels=16)
    params = ParameterSet.from_potential(vacuum_potential(-0.5), quad)

    a = density_g(Species.ION, -0.3, R_B, params, f, quad)
    b = density_g(Species.ION, -0.3, R_B, params, f, plain)

    assert float(a) == pytest.approx(float(b), rel=1e-6)


def test_quadrature_error():
    """Test that a non-finite density raises QuadratureError with its location."""
    f = box()
    quad = QuadratureSpec.covering(f)
    params = ParameterSet.from_potential(flat_potential(), quad)

    with pytest.raises(QuadratureError) as info:
        density_g(Species.ION, math.nan, 1.5, params, f, quad)

    assert info.value.r == 1.5
    assert math.isnan(info.value.nu)


def test_holder_ratio_bounded():
    """Test that the nu-modulus of g does not blow up at small scales."""
    f = box()
    quad = QuadratureSpec.covering(f)
    params = ParameterSet.from_potential(vacuum_potential(-1.0), quad)
    gamma = 0.5
    exponent = gamma / (2.0 * (gamma + 1.0))
    deltas = np.logspace(0.0, -6.0, 13)

    for r in (1.1, 1.5):
        ratios = holder_ratios(Species.ION, r, np.linspace(-1.0, 0.5, 7), deltas, exponent, params, f, quad)

        assert np.all(np.isfinite(ratios))
        assert ratios.max() < 100.0 * ratios[0]


# ============================================================================
# CURRENTS
# ============================================================================


def test_current_flat_potential():
    """Test the probe current of the unit box in phi = 0 against -4/(3 sqrt(3))."""
    f = box()
    quad = QuadratureSpec.covering(f)
    j = current_density(Species.ION, flat_potential(), f, 1.0, quad)

    assert j.values[0] == pytest.approx(-4.0 / (3.0 * math.sqrt(3.0)), rel=1e-3)


def test_current_times_radius_constant():
    """Test that r j(r) is one number and j <= 0."""
    f = half_maxwellian()
    quad = QuadratureSpec.covering(f, sup_points=201)
    j = current_density(Species.ION, vacuum_potential(-1.0), f, 1.0 / 1836.0, quad)
    flux = j.nodes * j.values

    np.testing.assert_allclose(flux, flux[0], rtol=0.0, atol=1e-8)
    assert np.all(j.values <= 0.0)


def test_electron_current_mass_ratio():
    """Test the 1/sqrt(mu) factor of the electron current."""
    f = box()
    quad = QuadratureSpec.covering(f)
    phi = flat_potential()
    mu = 0.25

    j_i = current_density(Species.ION, phi, f, mu, quad)
    j_e = current_density(Species.ELECTRON, phi, f, mu, quad)

    np.testing.assert_allclose(j_e.values, 2.0 * j_i.values, rtol=1e-12)


def test_repelled_species_current_shrinks():
    """Test that a repulsive probe lets fewer ions through than an attractive one."""
    f = half_maxwellian()
    quad = QuadratureSpec.covering(f, sup_points=201)

    attracted = current_density(Species.ION, vacuum_potential(-1.0), f, 1.0, quad).values[0]
    repelled = current_density(Species.ION, vacuum_potential(1.0), f, 1.0, quad).values[0]

    assert abs(repelled) < abs(attracted)
