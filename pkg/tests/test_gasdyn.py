import math

import numpy as np
import pytest

from wedgeflow.errors import RegimeError
from wedgeflow.models import GasModel, State
from wedgeflow.services import gasdyn, waves


# ---------------------------------------------------------------------------
# Thermodynamics
# ---------------------------------------------------------------------------

def test_sound_speed_examples():
    assert gasdyn.sound_speed(State(2.0, 0.0, 1.0, 1.4), GasModel(gamma=1.4)) == pytest.approx(1.0)
    assert gasdyn.sound_speed(State(3.0, 0.0, 2.0, 1.0), GasModel(gamma=2.0)) == pytest.approx(2.0)
    air = State(400.0, 0.0, 101325.0, 1.225)
    assert gasdyn.sound_speed(air, GasModel(gamma=1.4)) == pytest.approx(340.29, rel=1e-4)


def test_gas_model_rejects_gamma_not_above_one():
    with pytest.raises(ValueError):
        GasModel(gamma=1.0)


def test_state_rejects_non_positive_pressure():
    with pytest.raises(RegimeError):
        State(1.0, 0.0, 0.0, 1.0)


def test_supersonic_flags(gas):
    fast_sideways = State(0.5, 2.0, 1.0, 1.4)
    assert gasdyn.is_supersonic(fast_sideways, gas)
    assert not gasdyn.is_x_supersonic(fast_sideways, gas)
    assert gasdyn.is_x_supersonic(State(2.0, 0.0, 1.0, 1.4), gas)


def test_mach_number_and_angle(inflow_state, gas):
    assert gasdyn.mach_number(inflow_state, gas) == pytest.approx(3.0)
    assert gasdyn.mach_angle(inflow_state, gas) == pytest.approx(math.asin(1.0 / 3.0))


# ---------------------------------------------------------------------------
# Fluxes
# ---------------------------------------------------------------------------

def test_fluxes_hand_evaluation():
    f = gasdyn.fluxes(State(1.0, 0.0, 1.0, 1.0), GasModel(gamma=2.0))
    assert f.w == pytest.approx((1.0, 2.0, 0.0, 2.5))


def test_y_flux_without_vertical_velocity_is_pressure_only(gas):
    f = gasdyn.fluxes(State(2.5, 0.0, 1.3, 1.1), gas)
    assert f.h == (0.0, 0.0, 1.3, 0.0)


def test_cross_momentum_fluxes_agree(inflow_state, gas):
    f = gasdyn.fluxes(inflow_state, gas)
    assert f.w[2] == f.h[1]


# ---------------------------------------------------------------------------
# Eigensystem
# ---------------------------------------------------------------------------

def test_eigenvalues_for_horizontal_flow(gas):
    lam = gasdyn.eigenvalues(State(2.0, 0.0, 1.0, 1.4), gas)
    assert lam[0] == pytest.approx(-1.0 / math.sqrt(3.0))
    assert lam[1] == lam[2] == 0.0
    assert lam[3] == pytest.approx(1.0 / math.sqrt(3.0))


def test_eigenvalues_reject_x_subsonic_state(gas):
    with pytest.raises(RegimeError):
        gasdyn.eigenvalues(State(0.9, 2.0, 1.0, 1.4), gas)


def test_eigenvalues_strictly_ordered(inflow_state, gas):
    lam = gasdyn.eigenvalues(inflow_state, gas)
    assert lam[0] < lam[1] == lam[2] < lam[3]
    assert lam[1] == pytest.approx(inflow_state.v / inflow_state.u)


def test_eigenvectors_solve_the_generalized_problem(gas):
    rng = np.random.default_rng(3)
    for _ in range(20):
        mach = rng.uniform(1.5, 4.0)
        angle = rng.uniform(-0.3, 0.3)
        s = gasdyn.uniform_state(mach, angle, gas, p=rng.uniform(0.5, 2.0), rho=rng.uniform(0.5, 2.0))
        dW, dH = gasdyn.flux_jacobians(s, gas)
        lam = gasdyn.eigenvalues(s, gas)
        for j, r in enumerate(gasdyn.eigenvectors(s, gas)):
            M = dH - lam[j] * dW
            scale = max(1.0, float(np.max(np.abs(M))) * float(np.linalg.norm(r)))
            assert np.max(np.abs(M @ r)) < 1e-10 * scale


def test_genuinely_nonlinear_normalization(inflow_state, gas):
    r1, _, _, r4 = gasdyn.eigenvectors(inflow_state, gas)
    assert r1 @ gasdyn.eigenvalue_gradient(inflow_state, 1, gas) == pytest.approx(1.0, abs=1e-8)
    assert r4 @ gasdyn.eigenvalue_gradient(inflow_state, 4, gas) == pytest.approx(1.0, abs=1e-8)


def test_density_change_keeps_contact_speed(inflow_state, gas):
    denser = State(inflow_state.u, inflow_state.v, inflow_state.p, 2.0 * inflow_state.rho)
    assert gasdyn.eigenvalues(denser, gas)[1] == gasdyn.eigenvalues(inflow_state, gas)[1]


# ---------------------------------------------------------------------------
# Entropy
# ---------------------------------------------------------------------------

def test_entropy_normalization(gas):
    rho = 1.7
    assert gasdyn.entropy_scalar(State(2.0, 0.0, rho ** 1.4, rho), gas) == pytest.approx(0.0, abs=1e-14)


def test_entropy_log_law(inflow_state, gas):
    doubled = State(inflow_state.u, inflow_state.v, 2.0 * inflow_state.p, inflow_state.rho)
    gained = gasdyn.entropy_scalar(doubled, gas) - gasdyn.entropy_scalar(inflow_state, gas)
    assert gained == pytest.approx(math.log(2.0))


def test_entropy_increases_across_shocks(inflow_state, gas):
    before = gasdyn.entropy_scalar(inflow_state, gas)
    for ratio in (1.05, 1.3, 2.0):
        after, _ = waves.hugoniot_state(inflow_state, 1, inflow_state.rho * ratio, gas)
        assert gasdyn.entropy_scalar(after, gas) > before
