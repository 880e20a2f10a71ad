import math

import pytest

from wedgeflow.services import gasdyn, riemann, validation
from wedgeflow.services.run_config import parse_config


# ---------------------------------------------------------------------------
# Oblique shocks
# ---------------------------------------------------------------------------

def test_oblique_shock_mach_3_ten_degrees(gas):
    sol = validation.oblique_shock(3.0, math.radians(10.0), gas)
    assert not sol.detached
    assert math.degrees(sol.beta_weak) == pytest.approx(27.38, abs=0.01)
    assert sol.weak.pressure_ratio == pytest.approx(2.05, abs=0.01)
    assert math.degrees(sol.beta_strong) == pytest.approx(86.4, abs=0.1)
    assert sol.weak.mach == pytest.approx(2.505, abs=0.005)


def test_zero_deflection_is_the_mach_wave(gas):
    sol = validation.oblique_shock(2.0, 0.0, gas)
    assert sol.beta_weak == pytest.approx(math.asin(0.5))
    assert sol.weak.pressure_ratio == pytest.approx(1.0)


def test_detached_deflection(gas):
    sol = validation.oblique_shock(2.0, math.radians(30.0), gas)
    assert sol.detached
    assert sol.beta_weak is None


def test_max_deflection_mach_3(gas):
    assert math.degrees(validation.max_deflection_angle(3.0, gas)) == pytest.approx(34.07, abs=0.01)
    assert validation.max_deflection_angle(0.9, gas) == 0.0


def test_oblique_shock_argument_errors(gas):
    with pytest.raises(ValueError):
        validation.oblique_shock(0.8, 0.1, gas)
    with pytest.raises(ValueError):
        validation.oblique_shock(2.0, -0.1, gas)


# ---------------------------------------------------------------------------
# Prandtl–Meyer
# ---------------------------------------------------------------------------

def test_prandtl_meyer_values(gas):
    assert validation.prandtl_meyer(1.0, gas) == 0.0
    assert math.degrees(validation.prandtl_meyer(2.0, gas)) == pytest.approx(26.38, abs=0.01)


@pytest.mark.parametrize("mach", [1.05, 1.5, 2.0, 3.7, 6.0])
def test_inverse_prandtl_meyer(gas, mach):
    assert validation.inverse_prandtl_meyer(validation.prandtl_meyer(mach, gas), gas) == pytest.approx(mach,
                                                                                                      abs=1e-10)


def test_inverse_prandtl_meyer_range(gas):
    with pytest.raises(ValueError):
        validation.inverse_prandtl_meyer(math.radians(140.0), gas)
    assert validation.inverse_prandtl_meyer(0.0, gas) == 1.0


def test_mach_two_turned_through_ten_degrees(gas):
    nu = validation.prandtl_meyer(2.0, gas) + math.radians(10.0)
    assert validation.inverse_prandtl_meyer(nu, gas) == pytest.approx(2.38, abs=0.005)
    _, turned = riemann.turn_flow(gasdyn.uniform_state(2.0, 0.0, gas), math.radians(10.0), gas)
    assert gasdyn.mach_number(turned, gas) == pytest.approx(2.38, abs=0.005)
    assert turned.p < 1.0


# ---------------------------------------------------------------------------
# Detachment and self-test
# ---------------------------------------------------------------------------

def test_detachment_angle_close_to_max_deflection(gas):
    omega = validation.detachment_angle(3.0, gas)
    theta_max = validation.max_deflection_angle(3.0, gas)
    assert theta_max - math.radians(1.0) < omega <= theta_max


def test_oracle_suite_passes(gas):
    checks = validation.oracle_suite(gas)
    assert checks
    failed = [c for c in checks if not c.passed]
    assert not failed, failed
    names = {c.check for c in checks}
    assert {"theta-beta-mach weak", "vertex shock angle", "prandtl-meyer round trip", "expansion turn"} <= names


# ---------------------------------------------------------------------------
# Conservation residuals
# ---------------------------------------------------------------------------

def test_residual_of_constant_region(straight_history):
    report = validation.conservation_residual(straight_history, (0.1, 0.5, -2.0, -1.5))
    assert report.relative < 1e-13
    assert report.nonphysical_measure == 0.0


def test_residual_across_the_strong_shock(straight_history):
    report = validation.conservation_residual(straight_history, (0.1, 0.9, -0.5, -0.05))
    assert report.relative < 1e-11
    assert report.entropy >= -1e-10


def test_residual_along_the_wall(straight_history):
    report = validation.conservation_residual(straight_history, (0.2, 0.8, -0.6, 0.5))
    assert report.relative < 1e-11


def test_residual_on_perturbed_run(perturbed_history):
    report = validation.conservation_residual(perturbed_history, (0.0, 1.0, -1.2, 0.1))
    assert report.rarefaction_measure > 0.0
    assert report.relative < 1e-2


def test_residual_rejects_degenerate_rectangle(straight_history):
    with pytest.raises(ValueError):
        validation.conservation_residual(straight_history, (0.5, 0.5, -1.0, 0.0))


# ---------------------------------------------------------------------------
# Convergence
# ---------------------------------------------------------------------------

def test_fit_rate_recovers_the_slope():
    eps = [1e-1, 1e-2, 1e-3]
    assert validation.fit_rate(eps, [e ** 0.5 for e in eps]) == pytest.approx(0.5)
    assert validation.fit_rate(eps, [0.0, 0.0, 1e-3]) is None


def test_convergence_with_identical_eps(straight_cfg):
    table, histories = validation.convergence_study(straight_cfg, [0.01, 0.01])
    assert len(histories) == 2
    assert table.rows[0].l1 == 0.0
    assert table.slope is None
    assert table.event_counts == (1, 1)


def test_convergence_compares_every_pair_of_runs(straight_cfg):
    table, _ = validation.convergence_study(straight_cfg, [0.02, 0.01, 0.005])
    assert [(r.coarse, r.fine) for r in table.rows] == [(0, 1), (0, 2), (1, 2)]
    assert [(r.eps_coarse, r.eps_fine) for r in table.rows] == [(0.02, 0.01), (0.02, 0.005), (0.01, 0.005)]
    assert all(r.l1 < 1e-12 for r in table.rows)
    assert len(table.event_counts) == 3


def test_convergence_rejects_increasing_eps(straight_cfg):
    with pytest.raises(ValueError):
        validation.convergence_study(straight_cfg, [0.001, 0.01])


def test_convergence_on_the_perturbed_wedge(perturbed_text):
    cfg = parse_config(perturbed_text.replace("tracking.x_max = 1", "tracking.x_max = 0.5"))
    table, _ = validation.convergence_study(cfg, [0.01, 0.002])
    assert table.station == 0.5
    assert table.rows[0].l1 > 0.0
