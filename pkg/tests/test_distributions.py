"""Tests for boundary distributions, CSV tables and integrability norms."""

import math

import numpy as np
import pytest

from vpprobe.distributions import (
    FAMILIES,
    BoundaryDistribution,
    box,
    from_settings,
    half_maxwellian,
    norm_L1,
    norm_L1L_LinfW,
    norm_L1w_LinfL_gamma,
    norm_report,
    tabulated,
    witness,
    zero,
)
from vpprobe.quadrature import QuadratureSpec, composite_rule, unit_rule
from vpprobe.serialization import write_table


def write_grid_table(path, w_values, l_values, func):
    """Write a rectangular (w, L, f) table."""
    W, L = np.meshgrid(w_values, l_values, indexing="ij")
    return write_table(path, {"w": W.ravel(), "L": L.ravel(), "f": func(W, L).ravel()})


# ============================================================================
# QUADRATURE RULES
# ============================================================================


def test_unit_rule_integrates_polynomials():
    """Test that the composite unit rule is exact for moderate degrees."""
    x, w = unit_rule(3, 8)

    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert float(w @ x**7) == pytest.approx(1.0 / 8.0, abs=1e-14)


def test_composite_rule_splits_at_breaks():
    """Test that panels never straddle a breakpoint."""
    x, w = composite_rule([-1.0, 0.0, -0.3], 2, 4)

    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert float(w @ np.where(x < -0.3, 1.0, 0.0)) == pytest.approx(0.7, abs=1e-14)


def test_quadrature_covering_takes_largest_box():
    """Test that covering() spans every distribution."""
    quad = QuadratureSpec.covering(box(1.0, 2.0, 1.0), box(1.0, 1.0, 3.0))

    assert (quad.w_max, quad.l_max) == (2.0, 3.0)
    assert quad.w_breaks == (1.0,)
    assert quad.l_breaks == (1.0,)


def test_tail_tolerance_sets_the_box():
    """Test that a looser tail tolerance shrinks the covering box and the box has no tolerance of its own."""
    tight = QuadratureSpec.covering(half_maxwellian(tail_tolerance=1e-12))
    loose = QuadratureSpec.covering(half_maxwellian(tail_tolerance=1e-4))

    assert loose.w_max < tight.w_max
    with pytest.raises(TypeError):
        QuadratureSpec(w_max=1.0, l_max=1.0, tail_tolerance=1e-12)


def test_quadrature_rejects_empty_box():
    """Test that the truncation box must be positive."""
    with pytest.raises(ValueError, match="w_max"):
        QuadratureSpec(w_max=0.0, l_max=1.0)


# ============================================================================
# FAMILIES
# ============================================================================


def test_outgoing_half_plane_is_zero():
    """Test that every family vanishes for w >= 0."""
    for f in (half_maxwellian(), box(), witness(), zero()):
        assert np.all(f([0.0, 0.5, 3.0], [0.0, 0.1, -1.0]) == 0.0)


def test_half_maxwellian_value():
    """Test half-Maxwellian evaluation."""
    f = half_maxwellian(amplitude=2.0, temperature=0.5, drift=-1.0)

    assert float(f(-1.5, 0.5)) == pytest.approx(2.0 * math.exp(-0.5))
    assert float(f(-1.0, 0.3)) == float(f(-1.0, -0.3))


def test_half_maxwellian_parameters():
    """Test that invalid half-Maxwellian parameters are rejected."""
    with pytest.raises(ValueError, match="temperature"):
        half_maxwellian(temperature=0.0)


def test_box_edges():
    """Test that the box is closed on its left edge and in L."""
    f = box(height=3.0, w_width=1.0, l_half_width=0.5)

    assert float(f(-1.0, 0.5)) == 3.0
    assert float(f(-1.0 - 1e-12, 0.0)) == 0.0
    assert float(f(-0.5, 0.5 + 1e-12)) == 0.0


def test_witness_truncated():
    """Test that the witness vanishes outside its declared box."""
    f = witness(amplitude=1.0, w_max=5.0, l_max=2.0)

    assert float(f(-1.0, 1.0)) == pytest.approx(1.0 / 3.0)
    assert float(f(-6.0, 0.0)) == 0.0
    assert float(f(-1.0, 2.5)) == 0.0


def test_negative_samples_rejected():
    """Test that negative evaluator output raises."""
    f = BoundaryDistribution(lambda w, L: -np.ones_like(w), w_max=1.0, l_max=1.0)

    with pytest.raises(ValueError, match="negative"):
        f(-0.5, 0.0)


def test_scaled():
    """Test scaling a distribution."""
    f = box().scaled(2.5)

    assert float(f(-0.5, 0.0)) == 2.5
    assert f.parameters["scale"] == 2.5
    with pytest.raises(ValueError, match="positive"):
        box().scaled(0.0)


def test_from_settings_families():
    """Test building every family from settings."""
    for family in ("box", "half_maxwellian", "witness", "zero"):
        assert from_settings({"family": family}).family == family


def test_from_settings_unknown_family():
    """Test that unknown families are rejected."""
    assert "box" in FAMILIES
    with pytest.raises(ValueError, match="unknown distribution family"):
        from_settings({"family": "kappa"})


def test_from_settings_tabulated_needs_metadata():
    """Test that tabulated distributions need table, w_max and l_max."""
    with pytest.raises(ValueError, match="need table"):
        from_settings({"family": "tabulated", "table": "f.csv"})


# ============================================================================
# TABLES
# ============================================================================


def test_tabulated_bilinear(tmp_path):
    """Test bilinear interpolation at |L| and zero outside the table."""
    path = write_grid_table(
        tmp_path / "f.csv", np.linspace(-2.0, 0.0, 5), np.linspace(0.0, 1.0, 3), lambda w, L: 3.0 + w + L
    )
    f = tabulated(path, w_max=2.0, l_max=1.0, tail_tolerance=1e-12)

    assert float(f(-0.75, 0.3)) == pytest.approx(2.55)
    assert float(f(-0.75, -0.3)) == pytest.approx(2.55)
    assert float(f(-5.0, 0.0)) == 0.0


def test_tabulated_symmetric_rows(tmp_path):
    """Test that mirrored L < 0 rows are accepted."""
    path = write_grid_table(
        tmp_path / "f.csv", np.linspace(-1.0, 0.0, 3), np.linspace(-1.0, 1.0, 5), lambda w, L: 1.0 + L**2
    )
    f = tabulated(path, w_max=1.0, l_max=1.0, tail_tolerance=1e-12)

    assert float(f(-0.5, -1.0)) == pytest.approx(2.0)


def test_tabulated_asymmetric(tmp_path):
    """Test that tables not symmetric in L are rejected."""
    path = write_grid_table(
        tmp_path / "f.csv", np.linspace(-1.0, 0.0, 3), np.linspace(-1.0, 1.0, 5), lambda w, L: 2.0 + L
    )

    with pytest.raises(ValueError, match="not symmetric"):
        tabulated(path, w_max=1.0, l_max=1.0, tail_tolerance=1e-12)


def test_tabulated_negative(tmp_path):
    """Test that negative table entries are rejected."""
    path = write_grid_table(
        tmp_path / "f.csv", np.linspace(-1.0, 0.0, 3), np.linspace(0.0, 1.0, 3), lambda w, L: w
    )

    with pytest.raises(ValueError, match="non-negative"):
        tabulated(path, w_max=1.0, l_max=1.0, tail_tolerance=1e-12)


def test_tabulated_columns(tmp_path):
    """Test that the w, L, f header is required."""
    path = write_table(tmp_path / "f.csv", {"w": [-1.0, 0.0], "f": [1.0, 1.0]})

    with pytest.raises(ValueError, match="expected columns"):
        tabulated(path, w_max=1.0, l_max=1.0, tail_tolerance=1e-12)


# ============================================================================
# NORMS
# ============================================================================


def test_box_norms():
    """Test the three norms of the unit box."""
    f = box()
    quad = QuadratureSpec.covering(f)

    assert norm_L1(f, quad) == pytest.approx(2.0, abs=1e-12)
    assert norm_L1L_LinfW(f, quad) == pytest.approx(2.0, abs=1e-12)
    assert norm_L1w_LinfL_gamma(f, 0.5, quad) == pytest.approx(2.0, abs=1e-10)


def test_half_maxwellian_mass():
    """Test the L1 norm of the unit half-Maxwellian against pi."""
    f = half_maxwellian()
    quad = QuadratureSpec.covering(f)

    assert norm_L1(f, quad) == pytest.approx(math.pi, rel=1e-8)
    assert 0.0 <= f.tail_mass < 1e-10


def test_norm_report():
    """Test g_bound = 2 L1 + 4 L1_L(Linf_w)."""
    f = box(height=0.5)
    report = norm_report(f, QuadratureSpec.covering(f))

    assert report.finite
    assert report.g_bound == pytest.approx(2.0 * report.l1 + 4.0 * report.l1l_linfw)
    assert report.to_dict()["family"] == "box"


def test_witness_norms_finite():
    """Test that the truncated witness passes all three gates."""
    f = witness()
    report = norm_report(f, QuadratureSpec.covering(f, sup_points=501))

    assert report.finite
    assert report.l1 > 0.0


def test_zero_norms():
    """Test that the zero distribution has zero norms."""
    f = zero()
    report = norm_report(f, QuadratureSpec.covering(f))

    assert report.l1 == 0.0
    assert report.g_bound == 0.0


def test_gamma_range():
    """Test that gamma must lie in (0, 1)."""
    f = box()

    with pytest.raises(ValueError, match="gamma"):
        norm_L1w_LinfL_gamma(f, 1.0, QuadratureSpec.covering(f))


def test_quadrature_must_cover():
    """Test that norms refuse a quadrature box smaller than the decay box."""
    with pytest.raises(ValueError, match="does not cover"):
        norm_L1(box(w_width=2.0), QuadratureSpec(w_max=1.0, l_max=1.0))
