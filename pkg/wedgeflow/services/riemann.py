"""Riemann solvers for the front tracking.

All solvers return a WaveFan whose waves chain from ``below`` to ``above``; the last
wave always ends exactly on ``above`` so neighbouring fronts share states bit for bit.
"""

import logging
import math

import msgspec
import numpy as np
from scipy import optimize

from wedgeflow.errors import RegimeError, RiemannSolveError, ShockSolveError, StructuralFailure
from wedgeflow.models import (
    BoundaryRiemannInput,
    GasModel,
    State,
    StrongShock,
    WaveDescriptor,
    WaveFamily,
    WaveFan,
)
from wedgeflow.services import gasdyn, waves

logger = logging.getLogger(__name__)

NEWTON_TOLERANCE = 1e-13
ACCEPT_TOLERANCE = 1e-11
NEWTON_MAX_ITERATIONS = 50
FD_STEP = 1e-7
TURN_TOLERANCE = 1e-14

_PHYSICAL = (WaveFamily.ONE, WaveFamily.TWO, WaveFamily.THREE, WaveFamily.FOUR)
_SOLVE_ERRORS = (RegimeError, ShockSolveError, ValueError, ZeroDivisionError, OverflowError)


# ---------------------------------------------------------------------------
# Newton machinery
# ---------------------------------------------------------------------------

def _newton(residual, z0, scale, label):
    """Damped Newton with a forward-difference Jacobian; returns (z, residual norm)."""
    tol = NEWTON_TOLERANCE * scale
    z = np.asarray(z0, dtype=float)
    try:
        F = residual(z)
    except _SOLVE_ERRORS as exc:
        raise RiemannSolveError(f"{label}: initial guess outside the admissible region ({exc})") from exc
    norm = float(np.max(np.abs(F)))

    for iteration in range(NEWTON_MAX_ITERATIONS):
        if norm <= tol:
            logger.debug("%s converged in %d iterations (residual %.3e)", label, iteration, norm)
            return z, norm
        J = np.empty((len(z), len(z)))
        for k in range(len(z)):
            h = FD_STEP * max(1.0, abs(z[k]))
            probe = z.copy()
            try:
                probe[k] += h
                J[:, k] = (residual(probe) - F) / h
            except _SOLVE_ERRORS:
                probe[k] = z[k] - h
                J[:, k] = (F - residual(probe)) / h
        try:
            dz = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise RiemannSolveError(f"{label}: singular Jacobian") from exc

        t = 1.0
        while t >= 1.0 / 1024:
            try:
                F_new = residual(z + t * dz)
                norm_new = float(np.max(np.abs(F_new)))
            except _SOLVE_ERRORS:
                norm_new = math.inf
            if norm_new < norm or norm_new <= tol:
                break
            t *= 0.5
        else:
            if norm <= ACCEPT_TOLERANCE * scale:
                logger.debug("%s stalled at rounding level (residual %.3e)", label, norm)
                return z, norm
            raise RiemannSolveError(f"{label}: line search stalled at residual {norm:.3e}")
        z, F, norm = z + t * dz, F_new, norm_new

    if norm <= ACCEPT_TOLERANCE * scale:
        return z, norm
    raise RiemannSolveError(f"{label}: no convergence in {NEWTON_MAX_ITERATIONS} iterations "
                            f"(residual {norm:.3e})")


def _scale(state: State) -> float:
    return max(1.0, float(np.max(np.abs(state.as_array()))))


def _compose(below: State, z, g: GasModel) -> list[State]:
    states = []
    left = below
    for family, parameter in zip(_PHYSICAL, z, strict=True):
        left = waves.curve_state(left, family, float(parameter), g)
        states.append(left)
    return states


# ---------------------------------------------------------------------------
# Fan assembly
# ---------------------------------------------------------------------------

def _elementary(left: State, family, parameter: float, g: GasModel, delta: float) -> list[WaveDescriptor]:
    family = WaveFamily(family)
    if family.genuinely_nonlinear and waves._is_rarefaction_branch(family, parameter):
        return waves.rarefaction_path(left, family, parameter, g, delta)
    return [waves.describe_wave(left, family, parameter, g)]


def _close_chain(wave_list: list[WaveDescriptor], above: State) -> list[WaveDescriptor]:
    if wave_list:
        wave_list[-1] = msgspec.structs.replace(wave_list[-1], right_state=above)
    return wave_list


def _assemble(below: State, above: State, head: list[WaveDescriptor], families, params, g: GasModel,
              delta: float) -> list[WaveDescriptor]:
    wave_list = list(head)
    left = wave_list[-1].right_state if wave_list else below
    for family, parameter in zip(families, params, strict=True):
        if parameter == 0.0:
            continue
        wave_list.extend(_elementary(left, family, float(parameter), g, delta))
        left = wave_list[-1].right_state
    if not wave_list and below != above:
        raise RiemannSolveError("distinct states joined by an empty fan")
    return _close_chain(wave_list, above)


def _totals(wave_list: list[WaveDescriptor]) -> tuple[float, float, float, float]:
    totals = dict.fromkeys(_PHYSICAL, 0.0)
    for w in wave_list:
        if w.family in totals and not w.strong:
            totals[w.family] += w.strength
    return tuple(totals[f] for f in _PHYSICAL)


def recompose(fan: WaveFan, g: GasModel) -> State:
    """Walk the fan from ``below`` re-applying every wave; nonphysical jumps are taken as stored."""
    state = fan.below
    for w in fan.waves:
        if w.nonphysical:
            state = State.from_array(state.as_array() + w.right_state.as_array() - w.left_state.as_array())
        elif w.strong:
            state = waves.strong_shock_from_speed(state, w.speed, g)
        else:
            state = waves.curve_state(state, w.family, w.parameter, g)
    return state


# ---------------------------------------------------------------------------
# Accurate solvers
# ---------------------------------------------------------------------------

def solve_accurate(below: State, above: State, g: GasModel, delta_eps: float) -> WaveFan:
    """Four-wave solution ψ4∘ψ3∘ψ2∘ψ1(below) = above with discretized rarefactions."""
    if below == above:
        return WaveFan(below=below, above=above, strengths=(0.0, 0.0, 0.0, 0.0))
    target = above.as_array()
    z, residual = _newton(lambda z: _compose(below, z, g)[-1].as_array() - target,
                          np.zeros(4), _scale(above), "accurate Riemann solve")
    middle = _compose(below, z, g)[:3]
    wave_list = _assemble(below, above, [], _PHYSICAL, z, g, delta_eps)
    return WaveFan(below=below, above=above, waves=tuple(wave_list), middle_states=tuple(middle),
                   strengths=_totals(wave_list), residual=residual, solver="accurate")


def _strong_descriptor(below: State, sigma: float, g: GasModel, behind: State | None = None) -> WaveDescriptor:
    if behind is None:
        behind = waves.strong_shock_from_speed(below, sigma, g)
    return WaveDescriptor(family=WaveFamily.ONE,
                          strength=-waves.hugoniot_arc_length(below, 1, behind.rho, g),
                          left_state=below, right_state=behind, speed=sigma,
                          parameter=math.log(behind.rho / below.rho), strong=True)


def solve_strong(below: State, above: State, g: GasModel, delta_eps: float = 1e-2,
                 sigma_guess: float | None = None, bracket: float = 0.1,
                 center: float | None = None) -> WaveFan:
    """Strong 1-shock of slope σ′ followed by weak 2-, 3- and 4-waves.

    σ′ must stay within ``bracket`` of ``center`` (the unperturbed slope σ0 in a
    run; the initial guess when not given).
    """
    if sigma_guess is None:
        try:
            sigma_guess = waves.hugoniot_locus(below, 1, above.rho, g)[1]
        except RegimeError as exc:
            raise StructuralFailure(f"states do not straddle a strong shock: {exc}") from exc
    if center is None:
        center = sigma_guess
    target = above.as_array()

    def compose(unknowns):
        left = waves.strong_shock_from_speed(below, float(unknowns[0]), g)
        states = [left]
        for family, parameter in zip(_PHYSICAL[1:], unknowns[1:], strict=True):
            left = waves.curve_state(left, family, float(parameter), g)
            states.append(left)
        return states

    try:
        z, residual = _newton(lambda z: compose(z)[-1].as_array() - target,
                              np.array([sigma_guess, 0.0, 0.0, 0.0]), _scale(above), "strong-shock solve")
    except RiemannSolveError as exc:
        raise StructuralFailure(f"strong-shock interaction has no solution: {exc}") from exc
    sigma = float(z[0])
    if abs(sigma - center) > bracket:
        raise StructuralFailure(f"strong-shock slope {sigma:.6g} left the bracket "
                                f"[{center - bracket:.6g}, {center + bracket:.6g}]",
                                context={"sigma": sigma, "center": center})
    middle = compose(z)[:3]
    head = [_strong_descriptor(below, sigma, g, behind=middle[0])]
    wave_list = _assemble(below, above, head, _PHYSICAL[1:], z[1:], g, delta_eps)
    totals = _totals(wave_list)
    return WaveFan(below=below, above=above, waves=tuple(wave_list), middle_states=tuple(middle),
                   contains_strong=True, strengths=(sigma, *totals[1:]), residual=residual,
                   solver="accurate-strong")


# ---------------------------------------------------------------------------
# Boundary solvers
# ---------------------------------------------------------------------------

def face_angle(normal) -> float:
    """Face direction angle from its outer normal (−sin θ, cos θ)."""
    return math.atan2(-normal[0], normal[1])


def turn_flow(front: State, target_angle: float, g: GasModel) -> tuple[float, State]:
    """Single 1-wave from ``front`` whose downstream flow angle is ``target_angle``.

    Returns the log density ratio of the wave and the downstream state.
    """
    current = front.flow_angle
    if abs(target_angle - current) < TURN_TOLERANCE:
        return 0.0, front

    if target_angle < current:
        r_apex, apex_angle = waves.shock_polar_apex(front, g)
        if apex_angle > target_angle:
            raise StructuralFailure(
                f"detachment: turning by {math.degrees(current - target_angle):.6g}° exceeds the "
                f"maximum deflection {math.degrees(current - apex_angle):.6g}°",
                context={"turn": current - target_angle, "max_deflection": current - apex_angle},
            )

        def mismatch(z):
            return waves.hugoniot_locus(front, 1, front.rho * math.exp(z), g)[0].flow_angle - target_angle

        z = optimize.brentq(mismatch, 0.0, math.log(r_apex), xtol=1e-15, rtol=4 * np.finfo(float).eps)
        state = waves.hugoniot_locus(front, 1, front.rho * math.exp(z), g)[0]
    else:
        def mismatch(z):
            return waves.curve_state(front, 1, z, g).flow_angle - target_angle

        lo = -0.05
        for _ in range(40):
            try:
                if mismatch(lo) >= 0.0:
                    break
            except RegimeError as exc:
                raise StructuralFailure(
                    f"expansion by {math.degrees(target_angle - current):.6g}° leaves the supersonic regime",
                    context={"turn": target_angle - current},
                ) from exc
            lo *= 2.0
        else:
            raise StructuralFailure("expansion turn could not be bracketed")
        z = optimize.brentq(mismatch, lo, 0.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        state = waves.curve_state(front, 1, z, g)

    if not gasdyn.is_x_supersonic(state, g):
        raise StructuralFailure("downstream state of the boundary wave is not x-supersonic",
                                context={"turn": target_angle - current})
    return z, state


def _single_one_wave(below: State, z: float, g: GasModel, delta: float, solver: str) -> WaveFan:
    if z == 0.0:
        return WaveFan(below=below, above=below, strengths=(0.0, 0.0, 0.0, 0.0), solver=solver)
    above = waves.curve_state(below, 1, z, g)
    wave_list = _assemble(below, above, [], (WaveFamily.ONE,), (z,), g, delta)
    return WaveFan(below=below, above=above, waves=tuple(wave_list), middle_states=(above,),
                   strengths=_totals(wave_list), solver=solver)


def solve_boundary_reflection(below: State, wall_state: State, normal, g: GasModel,
                              delta_eps: float = 1e-2) -> WaveFan:
    """Outgoing 1-wave restoring tangency after a front reached the wall.

    ``below`` is the state under the absorbed front; the returned fan starts there
    and its top state is the new wall state.
    """
    if below == wall_state:
        return WaveFan(below=below, above=below, strengths=(0.0, 0.0, 0.0, 0.0), solver="reflection")
    z, _ = turn_flow(below, face_angle(normal), g)
    return _single_one_wave(below, z, g, delta_eps, "reflection")


def solve_boundary_exit(front: WaveDescriptor) -> WaveFan:
    """A nonphysical front leaves through the wall; the state below it becomes the wall state."""
    if not front.nonphysical:
        raise ValueError(f"only nonphysical fronts leave through the wall, got family {front.family.label}")
    below = front.left_state
    return WaveFan(below=below, above=below, strengths=(0.0, 0.0, 0.0, 0.0), solver="exit")


def solve_boundary_vertex(problem: BoundaryRiemannInput, g: GasModel, delta_eps: float = 1e-2) -> WaveFan:
    """Lateral Riemann problem: the wall turns by ω and one 1-wave restores tangency."""
    target = face_angle(problem.normal_next)
    incoming = target - problem.omega
    speed = problem.state.speed
    if abs(speed * math.sin(problem.state.flow_angle - incoming)) > 1e-8 * max(1.0, speed):
        raise ValueError("vertex state is not tangent to the incoming face")
    if abs(problem.omega) < TURN_TOLERANCE:
        return WaveFan(below=problem.state, above=problem.state, strengths=(0.0, 0.0, 0.0, 0.0),
                       solver="vertex")
    z, _ = turn_flow(problem.state, target, g)
    return _single_one_wave(problem.state, z, g, delta_eps, "vertex")


# ---------------------------------------------------------------------------
# Simplified solvers
# ---------------------------------------------------------------------------

def nonphysical_wave(left: State, right: State, lambda_hat: float) -> WaveDescriptor:
    return WaveDescriptor(family=WaveFamily.NONPHYSICAL, strength=left.distance(right),
                          left_state=left, right_state=right, speed=lambda_hat)


def _reapply(left: State, w: WaveDescriptor, g: GasModel) -> WaveDescriptor:
    right, strength = waves.curve_point(left, w.family, w.parameter, g)
    return WaveDescriptor(family=w.family, strength=strength, left_state=left, right_state=right,
                          speed=waves.wave_speed(left, right, w.family, w.parameter, g),
                          parameter=w.parameter)


def solve_simplified_weak(alpha: WaveDescriptor, beta: WaveDescriptor, lambda_hat: float,
                          g: GasModel) -> WaveFan:
    """Pass ``alpha`` (lower) and ``beta`` (upper) through each other unchanged.

    The upper wave is re-emitted first from the lower state, then the lower wave;
    a nonphysical front at ``lambda_hat`` closes the remaining jump.
    """
    below, above = alpha.left_state, beta.right_state
    outgoing = []
    left = below
    for w in (beta, alpha):
        if w.nonphysical or w.strength == 0.0:
            continue
        reapplied = _reapply(left, w, g)
        outgoing.append(reapplied)
        left = reapplied.right_state
    nonphysical = 0.0
    if left != above:
        closing = nonphysical_wave(left, above, lambda_hat)
        outgoing.append(closing)
        nonphysical = closing.strength
    return WaveFan(below=below, above=above, waves=tuple(outgoing), nonphysical_strength=nonphysical,
                   solver="simplified")


def solve_simplified_strong(weak: WaveDescriptor, strong: StrongShock, side: str, lambda_hat: float,
                            g: GasModel) -> WaveFan:
    """Keep the strong shock's slope, move the weak wave's jump into a nonphysical front.

    side='below': the weak wave hit from Ω−; the shock now starts from the new
    below state and ends on its exact R–H partner G(U−, σ).
    side='above': the weak wave hit from Ω+; the shock is kept as is.
    """
    if side not in ("below", "above"):
        raise ValueError(f"side must be 'below' or 'above', got {side!r}")
    if side == "below":
        below, above = weak.left_state, strong.above_state
        try:
            shock = _strong_descriptor(below, strong.sigma, g)
        except ShockSolveError as exc:
            raise StructuralFailure(f"strong shock cannot keep slope {strong.sigma:.6g}: {exc}") from exc
    else:
        below, above = strong.below_state, weak.right_state
        shock = _strong_descriptor(below, strong.sigma, g, behind=strong.above_state)
    outgoing = [shock]
    nonphysical = 0.0
    if shock.right_state != above:
        closing = nonphysical_wave(shock.right_state, above, lambda_hat)
        outgoing.append(closing)
        nonphysical = closing.strength
    return WaveFan(below=below, above=above, waves=tuple(outgoing), contains_strong=True,
                   nonphysical_strength=nonphysical, solver="simplified-strong")


# ---------------------------------------------------------------------------
# Hugoniot connections (Lyapunov functional)
# ---------------------------------------------------------------------------

def _hugoniot_step(left: State, family, parameter: float, g: GasModel) -> State:
    family = WaveFamily(family)
    if family.linearly_degenerate:
        return waves.curve_state(left, family, parameter, g)
    if parameter == 0.0:
        return left
    return waves.hugoniot_locus(left, family, left.rho * math.exp(parameter), g)[0]


def connect_hugoniot(start: State, end: State, g: GasModel,
                     guess=None) -> tuple[tuple[float, float, float, float], tuple[State, State, State]]:
    """Connect ``start`` to ``end`` along S1, C2, C3, S4 only.

    Returns signed strengths (positive in the rarefaction direction of families 1
    and 4) and the three intermediate states.
    """
    if start == end:
        return (0.0, 0.0, 0.0, 0.0), (start, start, start)
    target = end.as_array()

    def compose(z):
        states = []
        left = start
        for family, parameter in zip(_PHYSICAL, z, strict=True):
            left = _hugoniot_step(left, family, float(parameter), g)
            states.append(left)
        return states

    z0 = np.zeros(4) if guess is None else np.asarray(guess, dtype=float)
    z, _ = _newton(lambda z: compose(z)[-1].as_array() - target, z0, _scale(end), "Hugoniot connection")
    states = compose(z)
    strengths = []
    left = start
    for family, parameter, right in zip(_PHYSICAL, z, states, strict=True):
        parameter = float(parameter)
        if family.linearly_degenerate:
            strengths.append(parameter)
        else:
            length = waves.hugoniot_arc_length(left, family, right.rho, g)
            strengths.append(length if waves._is_rarefaction_branch(family, parameter) else -length)
        left = right
    return tuple(strengths), (states[0], states[1], states[2])
