"""Tests for the outer self-consistency loop and its report."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from vpprobe import SolverConfig
from vpprobe.characteristics import check_solution
from vpprobe.cli import write_report
from vpprobe.envelope import RadialGridFunction
from vpprobe.fixedpoint import (
    ExitReason,
    SolveReport,
    iterate,
    self_consistency_residual,
    update_parameters,
)
from vpprobe.kinetics import ParameterSet, Species
from vpprobe.quadrature import QuadratureSpec
from vpprobe.serialization import JSONSerializer

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def empty_config(**physics):
    """Config without particles on a coarse grid."""
    return SolverConfig(
        {
            "physics": physics,
            "ions": {"family": "zero"},
            "electrons": {"family": "zero"},
            "grid": {"x_nodes": 21},
            "quadrature": {"barrier_nodes": 33, "sup_points": 101},
        }
    )


def ion_config(**solver):
    """Box ions, no electrons, attractive probe."""
    return SolverConfig(
        {
            "physics": {"phi_p": -1.0},
            "ions": {"family": "box", "amplitude": 0.2},
            "electrons": {"family": "zero"},
            "grid": {"x_nodes": 21},
            "quadrature": {"barrier_nodes": 65, "sup_points": 201},
            "solver": solver,
        }
    )


# ============================================================================
# PARAMETERS AND CONSISTENCY
# ============================================================================


def test_update_parameters_is_consistent():
    """Test that parameters built from phi have zero self-consistency residual."""
    quad = QuadratureSpec(w_max=1.0, l_max=1.0, barrier_nodes=33)
    phi = RadialGridFunction.uniform(1.0, 2.0, 21, lambda r: np.sin(4.0 * r))
    params = update_parameters(phi, quad)

    residual = self_consistency_residual(phi, params, quad)

    assert residual.total == 0.0
    assert residual.to_dict() == {"height": 0.0, "barrier": 0.0, "total": 0.0}


def test_consistency_detects_stale_parameters():
    """Test that parameters of another potential leave a residual."""
    quad = QuadratureSpec(w_max=1.0, l_max=1.0, barrier_nodes=33)
    phi = RadialGridFunction.uniform(1.0, 2.0, 21, lambda r: np.sin(4.0 * r))
    other = phi.with_values(phi.values + 0.1 * (2.0 - phi.nodes))

    residual = self_consistency_residual(phi, update_parameters(other, quad), quad)

    assert 0.0 < residual.height <= 0.1 + 1e-12
    assert residual.total >= residual.height


def test_consistency_needs_shared_nodes():
    """Test that parameters on other radii are rejected."""
    quad = QuadratureSpec(w_max=1.0, l_max=1.0, barrier_nodes=33)
    phi = RadialGridFunction.uniform(1.0, 2.0, 21)
    params = ParameterSet.from_potential(RadialGridFunction.uniform(1.0, 2.0, 11), quad)

    with pytest.raises(ValueError, match="different nodes"):
        self_consistency_residual(phi, params, quad)


# ============================================================================
# ITERATION
# ============================================================================


def test_trivial_plasma_converges_at_once():
    """Test that f = 0 and phi_p = 0 give phi = 0 after one iteration."""
    report = iterate(empty_config())

    assert report.exit_reason is ExitReason.CONVERGED
    assert report.iterations == 1
    assert float(np.max(np.abs(report.phi.values))) <= 1e-8
    assert report.probe_currents == (0.0, 0.0)


def test_vacuum_potential():
    """Test that without particles phi is phi_p (1 - x)."""
    report = iterate(empty_config(phi_p=-0.7, r_b=3.0))
    x = np.log(report.phi.nodes) / math.log(3.0)

    assert report.converged
    np.testing.assert_allclose(report.phi.values, -0.7 * (1.0 - x), atol=1e-12)
    assert report.poisson_residual == 0.0
    assert report.consistency.total == 0.0


def test_warm_start_resets_boundary_values():
    """Test that an initial potential is interpolated with its ends reset."""
    config = empty_config(phi_p=-0.5)
    initial = RadialGridFunction.uniform(1.0, 2.0, 5, lambda r: 0.3 + 0.0 * r)

    report = iterate(config, initial)

    assert report.phi.values[0] == -0.5
    assert report.phi.values[-1] == 0.0


def test_invalid_configuration():
    """Test that iterate validates the configuration first."""
    config = empty_config()
    config["ions.family"] = "tabulated"

    with pytest.raises(ValueError, match="tabulated family needs"):
        iterate(config)


def test_report_payload():
    """Test the JSON payload of a report."""
    report = iterate(empty_config(phi_p=-1.0))

    payload = report.to_dict()
    text = JSONSerializer().serialize(payload)

    assert "wall_time" not in payload
    assert payload["exit_reason"] == "converged"
    assert payload["probe_current"] == {"ion": 0.0, "electron": 0.0, "total": 0.0}
    assert payload["config"]["physics"]["phi_p"] == -1.0
    assert set(payload["norms"]) == {"electrons", "ions"}
    assert json.loads(text)["iterations"] == 1


def test_report_columns():
    """Test profile and convergence columns."""
    report = iterate(empty_config(phi_p=-1.0))

    profile = report.profile_columns()
    history = report.convergence_columns()

    assert list(profile) == ["r", "phi", "n_i", "n_e", "j_i", "j_e"]
    assert all(len(column) == 21 for column in profile.values())
    assert history["iteration"].tolist() == [1]
    assert history["inner_iterations"].tolist() == [0]


def test_report_defaults():
    """Test a report that never reached the density stage."""
    phi = RadialGridFunction.uniform(1.0, 2.0, 3)
    quad = QuadratureSpec(w_max=1.0, l_max=1.0, barrier_nodes=5)
    report = SolveReport(SolverConfig(), phi, phi, update_parameters(phi, quad), ExitReason.MAX_ITERATIONS)

    assert not report.converged
    assert all(math.isnan(j) for j in report.probe_currents)
    assert np.all(np.isnan(report.profile_columns()["n_i"]))


@pytest.mark.slow
def test_inner_failure_is_reported():
    """Test that a failed semilinear solve ends the loop without raising."""
    report = iterate(ion_config(max_inner=1, tol_inner=1e-300))

    assert report.exit_reason is ExitReason.INNER_FAILURE
    assert "iteration 1" in report.message
    assert report.iterations == 0
    assert len(report.inner_iterations) == 1


@pytest.mark.slow
def test_iteration_cap_is_reported():
    """Test that max_outer ends the loop with MAX_ITERATIONS."""
    report = iterate(ion_config(max_outer=1))

    assert report.exit_reason is ExitReason.MAX_ITERATIONS
    assert report.iterations == 1
    assert "after 1 iterations" in report.message


@pytest.mark.slow
def test_ion_plasma_converges():
    """Test convergence, consistency and the curvature ceiling for box ions."""
    report = iterate(ion_config(max_outer=60))

    assert report.converged
    assert report.increments[-1] <= 1e-9
    assert report.consistency.total <= 1e-6
    assert max(report.max_curvature) <= report.curvature_ceiling
    assert report.min_coercivity_margin >= 0.0
    assert report.probe_currents[0] < 0.0


@pytest.mark.slow
def test_reference_box_configuration():
    """Test the reference box plasma: self-consistency, Poisson residual and Monte-Carlo densities."""
    config = SolverConfig.from_toml(CONFIGS / "reference_box.toml")
    report = iterate(config)

    assert report.exit_reason is ExitReason.CONVERGED
    assert report.consistency.total <= 1e-6
    assert report.poisson_residual <= 1e-5
    assert report.probe_currents[0] < 0.0

    f_i, f_e = config.distributions()
    check = check_solution(
        report.phi,
        {Species.ION: (f_i, report.ion_density), Species.ELECTRON: (f_e, report.electron_density)},
        n_radii=5,
        n_samples=400_000,
        weak_samples=50_000,
        seed=config.run.seed,
    )
    assert len(check.densities) == 10
    assert all(d.agrees for d in check.densities)


# ============================================================================
# REPRODUCIBILITY
# ============================================================================


def test_report_bytes_reproducible(tmp_path):
    """Test that two runs of the same configuration write identical report.json files."""
    config = empty_config(phi_p=-1.0)

    first = write_report(iterate(config), tmp_path / "first") / "report.json"
    second = write_report(iterate(config), tmp_path / "second") / "report.json"

    assert first.read_bytes() == second.read_bytes()


@pytest.mark.slow
def test_ion_report_bytes_reproducible(tmp_path):
    """Test byte-identical reports for a plasma that needs several outer iterations."""
    first = write_report(iterate(ion_config(max_outer=60)), tmp_path / "first")
    second = write_report(iterate(ion_config(max_outer=60)), tmp_path / "second")

    for name in ("report.json", "profile.csv", "convergence.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
