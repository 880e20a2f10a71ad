import math

import msgspec
import numpy as np
import pytest

from wedgeflow.errors import StructuralFailure
from wedgeflow.models import BoundaryRiemannInput, StrongShock, WaveFamily
from wedgeflow.services import gasdyn, riemann, validation, waves


@pytest.fixture
def horizontal(gas):
    return gasdyn.uniform_state(2.5, 0.0, gas)


@pytest.fixture
def vertex_shock(inflow_state, gas):
    """Strong shock turning the 10° Mach 3 inflow onto the horizontal wall."""
    z, behind = riemann.turn_flow(inflow_state, 0.0, gas)
    sigma = waves.hugoniot_locus(inflow_state, 1, behind.rho, gas)[1]
    return StrongShock(sigma=sigma, below_state=inflow_state, above_state=behind)


def _compose(below, params, gas):
    state = below
    for family, z in zip((1, 2, 3, 4), params, strict=True):
        state = waves.curve_state(state, family, z, gas)
    return state


# ---------------------------------------------------------------------------
# Accurate solver
# ---------------------------------------------------------------------------

def test_accurate_solve_recovers_four_waves(horizontal, gas):
    above = _compose(horizontal, (0.01, 0.005, -0.003, 0.02), gas)
    fan = riemann.solve_accurate(horizontal, above, gas, 0.005)
    assert fan.residual <= riemann.ACCEPT_TOLERANCE * 3.0
    assert fan.chain()[0] == horizontal
    assert fan.chain()[-1] == above
    assert riemann.recompose(fan, gas).distance(above) < 1e-9
    assert fan.strengths[0] < 0.0
    assert fan.strengths[1] == pytest.approx(0.005, abs=1e-9)
    assert fan.strengths[2] == pytest.approx(-0.003, abs=1e-9)
    assert fan.strengths[3] > 0.0
    rarefaction = [w for w in fan.waves if w.family is WaveFamily.FOUR]
    assert len(rarefaction) > 1
    assert all(w.strength <= 0.005 * (1.0 + 1e-9) for w in rarefaction)


def test_accurate_solve_single_four_shock(horizontal, gas):
    above, _ = waves.hugoniot_locus(horizontal, 4, horizontal.rho * math.exp(-0.02), gas)
    fan = riemann.solve_accurate(horizontal, above, gas, 0.01)
    assert fan.strengths[3] < 0.0
    assert max(abs(s) for s in fan.strengths[:3]) < 1e-10
    shock = next(w for w in fan.waves if w.family is WaveFamily.FOUR)
    assert waves.admissible(shock, gas).ok


def test_accurate_solve_of_equal_states_is_empty(horizontal, gas):
    fan = riemann.solve_accurate(horizontal, horizontal, gas, 0.01)
    assert fan.empty
    assert fan.strengths == (0.0, 0.0, 0.0, 0.0)


def test_accurate_solve_round_trips_random_states(horizontal, gas):
    rng = np.random.default_rng(2024)
    for params in rng.uniform(-0.01, 0.01, size=(1000, 4)):
        above = _compose(horizontal, params, gas)
        fan = riemann.solve_accurate(horizontal, above, gas, 0.01)
        assert fan.chain()[-1] == above
        assert riemann.recompose(fan, gas).distance(above) < 1e-9, params


# ---------------------------------------------------------------------------
# Strong-shock solver
# ---------------------------------------------------------------------------

def test_strong_solve_at_the_background(vertex_shock, gas):
    fan = riemann.solve_strong(vertex_shock.below_state, vertex_shock.above_state, gas,
                               sigma_guess=vertex_shock.sigma)
    assert fan.contains_strong
    assert len(fan.waves) == 1
    assert fan.waves[0].strong
    assert fan.strengths[0] == pytest.approx(vertex_shock.sigma, abs=1e-12)


def test_strong_solve_with_perturbed_top(vertex_shock, gas):
    above = waves.curve_state(vertex_shock.above_state, 4, 0.02, gas)
    fan = riemann.solve_strong(vertex_shock.below_state, above, gas, delta_eps=0.01,
                               center=vertex_shock.sigma)
    assert fan.waves[0].strong
    assert fan.strengths[0] != vertex_shock.sigma
    assert abs(fan.strengths[0] - vertex_shock.sigma) < 0.1
    assert fan.chain()[-1] == above
    assert riemann.recompose(fan, gas).distance(above) < 1e-9


def test_strong_solve_leaving_the_bracket_is_structural(vertex_shock, gas):
    with pytest.raises(StructuralFailure):
        riemann.solve_strong(vertex_shock.below_state, vertex_shock.above_state, gas,
                             sigma_guess=vertex_shock.sigma, bracket=1e-3, center=vertex_shock.sigma + 0.01)


# ---------------------------------------------------------------------------
# Boundary solvers
# ---------------------------------------------------------------------------

def test_vertex_turn_matches_oblique_shock_relation(inflow_state, vertex_shock, gas):
    oblique = validation.oblique_shock(3.0, math.radians(10.0), gas)
    beta = inflow_state.flow_angle - math.atan(vertex_shock.sigma)
    assert beta == pytest.approx(oblique.beta_weak, abs=1e-9)
    assert vertex_shock.above_state.flow_angle == pytest.approx(0.0, abs=1e-12)


def test_turn_flow_beyond_detachment_is_structural(inflow_state, gas):
    with pytest.raises(StructuralFailure, match="detachment"):
        riemann.turn_flow(inflow_state, inflow_state.flow_angle - math.radians(40.0), gas)


def test_expansion_turn_follows_prandtl_meyer(horizontal, gas):
    z, state = riemann.turn_flow(horizontal, math.radians(5.0), gas)
    assert z < 0.0
    gained = validation.prandtl_meyer(gasdyn.mach_number(state, gas), gas) - validation.prandtl_meyer(2.5, gas)
    assert gained == pytest.approx(math.radians(5.0), abs=1e-8)


def test_vertex_solver_requires_tangency(inflow_state, gas):
    problem = BoundaryRiemannInput(state=inflow_state, omega=0.0, normal_next=(0.0, 1.0))
    with pytest.raises(ValueError):
        riemann.solve_boundary_vertex(problem, gas)


def test_vertex_solver_compression_corner(horizontal, gas):
    omega = math.radians(-2.0)
    normal = (-math.sin(omega), math.cos(omega))
    fan = riemann.solve_boundary_vertex(BoundaryRiemannInput(state=horizontal, omega=omega, normal_next=normal),
                                        gas)
    assert len(fan.waves) == 1
    assert fan.waves[0].family is WaveFamily.ONE
    assert fan.waves[0].is_shock
    assert fan.above.flow_angle == pytest.approx(omega, abs=1e-12)


def test_boundary_reflection_restores_tangency(horizontal, gas):
    below = waves.curve_state(horizontal, 4, 0.01, gas)
    fan = riemann.solve_boundary_reflection(below, horizontal, (0.0, 1.0), gas)
    assert fan.above.flow_angle == pytest.approx(0.0, abs=1e-12)
    assert all(w.family is WaveFamily.ONE for w in fan.waves)


# ---------------------------------------------------------------------------
# Simplified solvers
# ---------------------------------------------------------------------------

def test_simplified_weak_swaps_waves_and_closes_with_nonphysical(horizontal, gas):
    alpha = waves.describe_wave(horizontal, 1, -0.005, gas)
    beta = waves.describe_wave(alpha.right_state, 4, 0.005, gas)
    fan = riemann.solve_simplified_weak(alpha, beta, 2.0, gas)
    assert [w.family for w in fan.waves] == [WaveFamily.FOUR, WaveFamily.ONE, WaveFamily.NONPHYSICAL]
    assert fan.waves[0].parameter == beta.parameter
    assert fan.waves[1].parameter == alpha.parameter
    assert fan.waves[-1].speed == 2.0
    assert fan.waves[-1].right_state == beta.right_state
    assert 0.0 < fan.nonphysical_strength < 5e-3


def test_simplified_weak_error_is_quadratic_in_the_strengths(horizontal, gas):
    sizes = [0.02, 0.01, 0.005, 0.0025]
    errors, products = [], []
    for h in sizes:
        alpha = waves.describe_wave(horizontal, 1, -h, gas)
        beta = waves.describe_wave(alpha.right_state, 4, h, gas)
        fan = riemann.solve_simplified_weak(alpha, beta, 2.0, gas)
        errors.append(fan.nonphysical_strength)
        products.append(abs(alpha.strength * beta.strength))
    assert validation.fit_rate(sizes, errors) == pytest.approx(2.0, abs=0.2)
    ratios = [e / p for e, p in zip(errors, products, strict=True)]
    assert max(ratios) < 1.5 * min(ratios)


def test_simplified_weak_reapplies_the_upper_wave_past_a_zero_strength_lower_one(horizontal, gas):
    middle = waves.curve_state(horizontal, 3, 1e-4, gas)
    alpha = msgspec.structs.replace(waves.describe_wave(horizontal, 3, 1e-4, gas, right=middle, strength=1e-4),
                                    strength=0.0)
    beta = waves.describe_wave(middle, 4, 0.005, gas)
    fan = riemann.solve_simplified_weak(alpha, beta, 2.0, gas)
    first = fan.waves[0]
    assert first.family is WaveFamily.FOUR
    assert first.left_state == horizontal
    assert first.right_state == waves.curve_state(horizontal, 4, beta.parameter, gas)
    assert fan.waves[-1].nonphysical
    assert fan.chain()[-1] == beta.right_state
    assert all(a.right_state == b.left_state for a, b in zip(fan.waves, fan.waves[1:], strict=False))


def test_nonphysical_front_leaves_through_the_wall(horizontal, gas):
    above = waves.curve_state(horizontal, 4, 0.001, gas)
    front = riemann.nonphysical_wave(horizontal, above, 2.0)
    fan = riemann.solve_boundary_exit(front)
    assert fan.solver == "exit"
    assert fan.empty
    assert fan.above == horizontal
    with pytest.raises(ValueError):
        riemann.solve_boundary_exit(waves.describe_wave(horizontal, 4, 0.001, gas))


def test_simplified_strong_from_below(vertex_shock, gas):
    weak = waves.describe_wave(vertex_shock.below_state, 3, 0.01, gas)
    strong = StrongShock(sigma=vertex_shock.sigma, below_state=weak.right_state,
                         above_state=waves.strong_shock_from_speed(weak.right_state, vertex_shock.sigma, gas))
    fan = riemann.solve_simplified_strong(weak, strong, "below", 2.0, gas)
    assert fan.contains_strong
    assert fan.waves[0].strong
    assert fan.waves[0].speed == strong.sigma
    assert fan.waves[0].left_state == weak.left_state
    assert fan.waves[-1].nonphysical
    assert fan.waves[-1].right_state == strong.above_state
    assert fan.nonphysical_strength > 0.0


def test_simplified_strong_rejects_unknown_side(vertex_shock, gas):
    weak = waves.describe_wave(vertex_shock.below_state, 3, 0.01, gas)
    with pytest.raises(ValueError):
        riemann.solve_simplified_strong(weak, vertex_shock, "left", 2.0, gas)


# ---------------------------------------------------------------------------
# Hugoniot connections
# ---------------------------------------------------------------------------

def test_connect_hugoniot_single_shock(inflow_state, gas):
    end, _ = waves.hugoniot_locus(inflow_state, 1, inflow_state.rho * 1.05, gas)
    strengths, middle = riemann.connect_hugoniot(inflow_state, end, gas)
    assert strengths[0] < 0.0
    assert max(abs(s) for s in strengths[1:]) < 1e-9
    assert middle[0].distance(end) < 1e-9


def test_connect_hugoniot_rarefaction_side_is_positive(inflow_state, gas):
    end = waves.curve_state(inflow_state, 1, -0.05, gas)
    strengths, _ = riemann.connect_hugoniot(inflow_state, end, gas)
    assert strengths[0] > 0.0
    assert max(abs(s) for s in strengths[1:]) < 1e-3


def test_connect_hugoniot_identity(inflow_state, gas):
    assert riemann.connect_hugoniot(inflow_state, inflow_state, gas)[0] == (0.0, 0.0, 0.0, 0.0)
