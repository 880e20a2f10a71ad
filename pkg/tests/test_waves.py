import math

import numpy as np
import pytest

from wedgeflow.errors import ShockSolveError, WaveKindError
from wedgeflow.models import State, WaveDescriptor, WaveFamily
from wedgeflow.services import gasdyn, waves


@pytest.fixture
def horizontal(gas):
    return gasdyn.uniform_state(2.5, 0.0, gas)


# ---------------------------------------------------------------------------
# Contacts
# ---------------------------------------------------------------------------

def test_vortex_sheet_keeps_direction_and_pressure(inflow_state, gas):
    w = waves.describe_wave(inflow_state, 2, 0.1, gas)
    assert w.strength == 0.1
    assert w.right_state.p == inflow_state.p
    assert w.right_state.rho == inflow_state.rho
    assert w.right_state.flow_angle == pytest.approx(inflow_state.flow_angle, abs=1e-15)
    assert w.right_state.speed == pytest.approx(inflow_state.speed + 0.1)
    assert w.speed == pytest.approx(inflow_state.v / inflow_state.u)


def test_entropy_wave_changes_density_only(inflow_state, gas):
    w = waves.describe_wave(inflow_state, 3, -0.2, gas)
    assert (w.right_state.u, w.right_state.v, w.right_state.p) == (inflow_state.u, inflow_state.v, inflow_state.p)
    assert w.right_state.rho == pytest.approx(inflow_state.rho - 0.2)


def test_contact_state_composes():
    s = State(2.0, 0.5, 1.0, 1.4)
    assert waves.contact_state(waves.contact_state(s, 0.1, 0.0), -0.1, 0.2).rho == pytest.approx(1.4 * math.exp(0.2))


# ---------------------------------------------------------------------------
# Rarefactions and shocks
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("family,z", [(1, -0.1), (4, 0.1)])
def test_rarefaction_follows_the_isentrope(horizontal, gas, family, z):
    right, strength = waves.curve_point(horizontal, family, z, gas)
    assert strength > 0.0
    assert right.rho == pytest.approx(horizontal.rho * math.exp(z))
    assert right.p == pytest.approx(horizontal.p * (right.rho / horizontal.rho) ** gas.gamma, rel=1e-14)
    assert gasdyn.entropy_scalar(right, gas) == pytest.approx(gasdyn.entropy_scalar(horizontal, gas), abs=1e-12)


def test_one_rarefaction_turns_the_flow_upwards(horizontal, gas):
    assert waves.curve_state(horizontal, 1, -0.1, gas).flow_angle > 0.0


@pytest.mark.parametrize("family,z", [(1, 0.1), (4, -0.1)])
def test_shock_strength_is_negative(horizontal, gas, family, z):
    _, strength = waves.curve_point(horizontal, family, z, gas)
    assert strength < 0.0


def test_rankine_hugoniot_jump(inflow_state, gas):
    for family in (1, 4):
        for ratio in (1.1, 1.8):
            right, s = waves.hugoniot_locus(inflow_state, family, inflow_state.rho * ratio, gas)
            w0, h0 = gasdyn.flux_arrays(inflow_state, gas)
            w1, h1 = gasdyn.flux_arrays(right, gas)
            assert np.max(np.abs((h1 - h0) - s * (w1 - w0))) < 1e-11 * np.max(np.abs(w0))


def test_hugoniot_state_rejects_expansion(inflow_state, gas):
    with pytest.raises(ValueError):
        waves.hugoniot_state(inflow_state, 1, 0.9 * inflow_state.rho, gas)


def test_arc_length_matches_chord_for_small_shocks(horizontal, gas):
    rho = horizontal.rho * 1.001
    right, _ = waves.hugoniot_locus(horizontal, 1, rho, gas)
    chord = math.sqrt(sum((a - b) ** 2 for a, b in zip(right.as_array(), horizontal.as_array(), strict=True)))
    assert waves.hugoniot_arc_length(horizontal, 1, rho, gas) == pytest.approx(chord, rel=1e-5)


# ---------------------------------------------------------------------------
# Strength inversion and strong shocks
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("family", [1, 4])
@pytest.mark.parametrize("alpha", [0.05, -0.05])
def test_parameter_for_strength_inverts_curve_strength(horizontal, gas, family, alpha):
    t = waves.parameter_for_strength(horizontal, family, alpha, gas)
    assert waves.curve_strength(horizontal, family, t, gas) == pytest.approx(alpha, abs=1e-10)
    assert waves.wave_curve(horizontal, family, alpha, gas) == waves.curve_state(horizontal, family, t, gas)


def test_zero_strength_is_identity(horizontal, gas):
    assert waves.wave_curve(horizontal, 1, 0.0, gas) == horizontal
    assert waves.curve_point(horizontal, 4, 0.0, gas) == (horizontal, 0.0)


def test_strong_shock_from_speed_recovers_the_hugoniot_point(inflow_state, gas):
    behind, sigma = waves.hugoniot_state(inflow_state, 1, 2.0 * inflow_state.rho, gas)
    recovered = waves.strong_shock_from_speed(inflow_state, sigma, gas)
    assert recovered.as_array() == pytest.approx(behind.as_array(), rel=1e-9)


def test_strong_shock_from_speed_rejects_subsonic_normal(inflow_state, gas):
    with pytest.raises(ShockSolveError):
        waves.strong_shock_from_speed(inflow_state, inflow_state.v / inflow_state.u, gas)


def test_shock_polar_apex_is_the_largest_turn(inflow_state, gas):
    r_apex, apex = waves.shock_polar_apex(inflow_state, gas)
    assert 1.0 < r_apex < gas.max_compression
    for r in (1.5, 2.5, 3.5):
        state, _ = waves.hugoniot_locus(inflow_state, 1, inflow_state.rho * r, gas)
        assert state.flow_angle >= apex - 1e-12


def test_rarefaction_path_pieces(horizontal, gas):
    delta = 0.01
    pieces = waves.rarefaction_path(horizontal, 1, -0.2, gas, delta)
    assert len(pieces) > 1
    assert all(0.0 < p.strength <= delta * (1.0 + 1e-9) for p in pieces)
    for lower, upper in zip(pieces, pieces[1:], strict=False):
        assert lower.right_state == upper.left_state
    assert sum(p.strength for p in pieces) == pytest.approx(waves.curve_strength(horizontal, 1, -0.2, gas),
                                                            rel=1e-6)
    end = waves.curve_state(horizontal, 1, -0.2, gas)
    assert pieces[-1].right_state.as_array() == pytest.approx(end.as_array(), rel=1e-8)


def test_nonphysical_fronts_have_no_curve(horizontal, gas):
    with pytest.raises(WaveKindError):
        waves.curve_point(horizontal, WaveFamily.NONPHYSICAL, 0.1, gas)


# ---------------------------------------------------------------------------
# Admissibility
# ---------------------------------------------------------------------------

def test_one_shock_is_admissible(inflow_state, gas):
    w = waves.describe_wave(inflow_state, 1, 0.2, gas)
    assert w.is_shock
    verdict = waves.admissible(w, gas)
    assert verdict.ok, verdict.diagnostic


def test_four_shock_is_admissible(horizontal, gas):
    w = waves.describe_wave(horizontal, 4, -0.05, gas)
    assert w.is_shock
    verdict = waves.admissible(w, gas)
    assert verdict.ok, verdict.diagnostic


def test_expansion_shock_is_rejected(inflow_state, gas):
    right, s = waves.hugoniot_locus(inflow_state, 1, 0.95 * inflow_state.rho, gas)
    w = WaveDescriptor(family=WaveFamily.ONE, strength=-0.01, left_state=inflow_state, right_state=right, speed=s)
    verdict = waves.admissible(w, gas)
    assert not verdict
    assert "density" in verdict.diagnostic


def test_admissibility_of_rarefaction_is_a_kind_error(horizontal, gas):
    w = waves.describe_wave(horizontal, 1, -0.05, gas)
    with pytest.raises(WaveKindError):
        waves.admissible(w, gas)
