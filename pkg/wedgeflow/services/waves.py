"""Elementary wave curves in state space.

Orientation: a wave joins a below (left) state to an above (right) state. For the
1-family the below state is the upstream side; for the 4-family it is the above state.

Curves are parameterized internally by ``z = ln(ρ_above / ρ_below)`` for families 1
and 4 and by signed arc length for the contacts:

    family 1:  z < 0 rarefaction, z > 0 shock
    family 4:  z > 0 rarefaction, z < 0 shock

Signed arc-length strengths are computed afterwards (positive for rarefactions).
"""

import logging
import math

import numpy as np
from scipy import optimize

from wedgeflow.errors import RegimeError, ShockSolveError, WaveKindError
from wedgeflow.models import Admissibility, GasModel, State, WaveDescriptor, WaveFamily
from wedgeflow.services import gasdyn

logger = logging.getLogger(__name__)

MIN_RAREFACTION_STEPS = 64
STEPS_PER_LOG_DENSITY = 512
MAX_RAREFACTION_STEPS = 20000
ARC_STEP = 1e-3
DEGENERATE_TOLERANCE = 1e-12

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(24)
_COMPLEX_STEP = 1e-30


def _sign(family) -> float:
    return -1.0 if int(family) == 1 else 1.0


def _speed(u, v, c2, sign):
    return (u * v + sign * math.sqrt(c2) * math.sqrt(max(u * u + v * v - c2, 0.0))) / (u * u - c2)


# ---------------------------------------------------------------------------
# Contacts
# ---------------------------------------------------------------------------

def contact_state(u0: State, t_w: float, t_rho: float) -> State:
    """Exact integral curves of r_2 = (u, v, 0, 0) and r_3 = (0, 0, 0, ρ)."""
    scale = math.exp(t_w)
    return State(u0.u * scale, u0.v * scale, u0.p, u0.rho * math.exp(t_rho))


def _contact_by_length(u0: State, family, length: float) -> State:
    if int(family) == 2:
        ratio = 1.0 + length / u0.speed
        if ratio <= 0.0:
            raise RegimeError("vortex sheet would reverse the flow")
        return contact_state(u0, math.log(ratio), 0.0)
    ratio = 1.0 + length / u0.rho
    if ratio <= 0.0:
        raise RegimeError("entropy wave would make the density non-positive")
    return contact_state(u0, 0.0, math.log(ratio))


# ---------------------------------------------------------------------------
# Rarefaction curves
# ---------------------------------------------------------------------------

def _tangent(u, v, p, rho, gamma, sign):
    """d(u, v, p)/dρ along R_j: dp = c²dρ, du = −λ dv, ρ(λu − v) dv = dp."""
    c2 = gamma * p / rho
    if u * u <= c2 * (1.0 + gasdyn.SUPERSONIC_TOLERANCE) ** 2:
        raise RegimeError(f"rarefaction left the x-supersonic region (u={u:.6g}, c={math.sqrt(c2):.6g})")
    lam = _speed(u, v, c2, sign)
    dv = c2 / (rho * (lam * u - v))
    return -lam * dv, dv, c2


def _rarefaction_in_density(base: State, family, rho_end: float, g: GasModel, n_steps=None):
    """Fixed-step RK4 in ρ from ``base``; returns (end state, arc length).

    Pressure follows the isentrope p = p0(ρ/ρ0)^γ exactly.
    """
    if rho_end == base.rho:
        return base, 0.0
    sign = _sign(family)
    gamma = g.gamma
    if n_steps is None:
        n_steps = math.ceil(abs(math.log(rho_end / base.rho)) * STEPS_PER_LOG_DENSITY)
        n_steps = min(max(MIN_RAREFACTION_STEPS, n_steps), MAX_RAREFACTION_STEPS)

    def rhs(rho, y):
        p = base.p * (rho / base.rho) ** gamma
        du, dv, c2 = _tangent(y[0], y[1], p, rho, gamma, sign)
        return np.array([du, dv, math.sqrt(du * du + dv * dv + c2 * c2 + 1.0)])

    h = (rho_end - base.rho) / n_steps
    y = np.array([base.u, base.v, 0.0])
    rho = base.rho
    for _ in range(n_steps):
        k1 = rhs(rho, y)
        k2 = rhs(rho + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(rho + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(rho + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho += h
    p_end = base.p * (rho_end / base.rho) ** gamma
    return State(float(y[0]), float(y[1]), p_end, rho_end), float(y[2])


def rarefaction_state(u0: State, family, alpha: float, g: GasModel) -> State:
    """Point at arc length ``alpha`` ≥ 0 along R_j from ``u0`` towards lower density."""
    if alpha < 0.0:
        raise ValueError("rarefaction arc length must be non-negative")
    if alpha == 0.0:
        return u0
    gasdyn.require_x_supersonic(u0, g)
    sign = _sign(family)
    gamma = g.gamma

    def rhs(y):
        du, dv, c2 = _tangent(y[0], y[1], y[2], y[3], gamma, sign)
        t = np.array([du, dv, c2, 1.0])
        return -t / np.linalg.norm(t)

    n_steps = max(MIN_RAREFACTION_STEPS, math.ceil(alpha / ARC_STEP))
    h = alpha / n_steps
    y = u0.as_array()
    for _ in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return State.from_array(y)


# ---------------------------------------------------------------------------
# Shock curves
# ---------------------------------------------------------------------------

def _hugoniot_components(u0, v0, p0, rho0, rho, gamma, sign):
    """Closed-form point of S_j through (u0, v0, p0, rho0); complex-safe."""
    r = rho / rho0
    b0 = 0.5 * (gamma + 1.0) - 0.5 * (gamma - 1.0) * r
    c02 = gamma * p0 / rho0
    cbar2 = c02 * r / b0
    s = (u0 * v0 + sign * np.sqrt(cbar2) * np.sqrt(u0 * u0 + v0 * v0 - cbar2)) / (u0 * u0 - cbar2)
    jump_p = c02 / b0 * (rho - rho0)
    jump_v = jump_p / (rho0 * (s * u0 - v0))
    jump_u = -s * jump_v
    return u0 + jump_u, v0 + jump_v, p0 + jump_p, s


def density_limits(u0: State, g: GasModel) -> tuple[float, float]:
    """Open interval of densities on which the closed-form S_j is defined."""
    c02 = g.gamma * u0.p / u0.rho
    # c̄² < u0² keeps the speed formula away from its pole
    r_pole = 0.5 * u0.u ** 2 * (g.gamma + 1.0) / (c02 + 0.5 * u0.u ** 2 * (g.gamma - 1.0))
    return 0.0, u0.rho * min(r_pole, g.max_compression)


def hugoniot_locus(u0: State, family, rho: float, g: GasModel) -> tuple[State, float]:
    """Point of the Hugoniot curve S_j(u0) at density ``rho`` (either side of ρ0)."""
    lo, hi = density_limits(u0, g)
    if not lo < rho < hi * (1.0 - 1e-12):
        raise RegimeError(f"density {rho:.6g} outside the Hugoniot range ({lo:.6g}, {hi:.6g})")
    c02 = g.gamma * u0.p / u0.rho
    r = rho / u0.rho
    b0 = 0.5 * (g.gamma + 1.0) - 0.5 * (g.gamma - 1.0) * r
    cbar2 = c02 * r / b0
    if u0.u ** 2 + u0.v ** 2 - cbar2 < 0.0:
        raise RegimeError("Hugoniot point has no real shock slope")
    u, v, p, s = _hugoniot_components(u0.u, u0.v, u0.p, u0.rho, rho, g.gamma, _sign(family))
    return State(float(u), float(v), float(p), rho), float(s)


def hugoniot_state(u0: State, family, rho: float, g: GasModel) -> tuple[State, float]:
    """Admissible shock from the upstream state ``u0`` to density ``rho`` > ρ0.

    Returns the downstream state and the shock slope. For the 1-family the
    downstream state lies above the front, for the 4-family below it.
    """
    gasdyn.require_x_supersonic(u0, g)
    if not u0.rho < rho < u0.rho * g.max_compression:
        raise ValueError(
            f"shock density {rho:.6g} outside ({u0.rho:.6g}, {u0.rho * g.max_compression:.6g})"
        )
    return hugoniot_locus(u0, family, rho, g)


def hugoniot_arc_length(u0: State, family, rho: float, g: GasModel) -> float:
    """Arc length of S_j between ``u0`` and density ``rho`` (Gauss–Legendre quadrature)."""
    if rho == u0.rho:
        return 0.0
    sign = _sign(family)
    half = 0.5 * (rho - u0.rho)
    mid = 0.5 * (rho + u0.rho)
    total = 0.0
    for node, weight in zip(_GAUSS_NODES, _GAUSS_WEIGHTS, strict=True):
        point = complex(mid + half * node, _COMPLEX_STEP)
        u, v, p, _ = _hugoniot_components(u0.u, u0.v, u0.p, u0.rho, point, g.gamma, sign)
        du, dv, dp = (x.imag / _COMPLEX_STEP for x in (u, v, p))
        total += weight * math.sqrt(du * du + dv * dv + dp * dp + 1.0)
    return abs(half) * total


def strong_shock_from_speed(u0: State, sigma: float, g: GasModel) -> State:
    """Downstream state G(u0, σ) of the 1-shock with slope ``sigma``."""
    c02 = g.gamma * u0.p / u0.rho
    normal_mach2 = (u0.v - sigma * u0.u) ** 2 / ((1.0 + sigma * sigma) * c02)
    if abs(normal_mach2 - 1.0) <= 1e-14:
        return u0
    if normal_mach2 < 1.0:
        raise ShockSolveError(f"slope {sigma:.6g} is not a shock slope for this state (Mn²={normal_mach2:.6g})")
    r = (g.gamma + 1.0) * normal_mach2 / ((g.gamma - 1.0) * normal_mach2 + 2.0)
    try:
        state, speed = hugoniot_locus(u0, 1, u0.rho * r, g)
    except RegimeError as exc:
        raise ShockSolveError(f"no admissible downstream density for slope {sigma:.6g}: {exc}") from exc
    if abs(speed - sigma) > 1e-8 * (1.0 + abs(sigma)):
        raise ShockSolveError(f"slope {sigma:.6g} lies on the 4-shock branch (1-shock slope {speed:.6g})")
    return state


def shock_polar_apex(u0: State, g: GasModel) -> tuple[float, float]:
    """Density ratio and flow angle at the maximum clockwise deflection along S_1(u0)."""
    lo, hi = density_limits(u0, g)
    r_hi = (hi / u0.rho) * (1.0 - 1e-9)

    def angle(log_r):
        try:
            state, _ = hugoniot_locus(u0, 1, u0.rho * math.exp(log_r), g)
        except RegimeError:
            return math.inf
        return state.flow_angle

    result = optimize.minimize_scalar(angle, bounds=(0.0, math.log(r_hi)), method="bounded",
                                      options={"xatol": 1e-12})
    return math.exp(result.x), float(result.fun)


# ---------------------------------------------------------------------------
# Unified wave curves
# ---------------------------------------------------------------------------

def _is_rarefaction_branch(family, z: float) -> bool:
    return z < 0.0 if int(family) == 1 else z > 0.0


def curve_point(u0: State, family, parameter: float, g: GasModel, n_steps=None) -> tuple[State, float]:
    """State reached from ``u0`` and the signed arc-length strength of the wave."""
    family = WaveFamily(family)
    if family.linearly_degenerate:
        return _contact_by_length(u0, family, parameter), parameter
    if family is WaveFamily.NONPHYSICAL:
        raise WaveKindError("nonphysical fronts have no wave curve")
    if parameter == 0.0:
        return u0, 0.0
    rho = u0.rho * math.exp(parameter)
    if _is_rarefaction_branch(family, parameter):
        state, length = _rarefaction_in_density(u0, family, rho, g, n_steps)
        return state, length
    state, _ = hugoniot_locus(u0, family, rho, g)
    return state, -hugoniot_arc_length(u0, family, rho, g)


def curve_state(u0: State, family, parameter: float, g: GasModel) -> State:
    """ψ_j(u0) at the internal parameter (log density ratio for 1/4, arc length for 2/3)."""
    family = WaveFamily(family)
    if family.linearly_degenerate:
        return _contact_by_length(u0, family, parameter)
    if parameter == 0.0:
        return u0
    rho = u0.rho * math.exp(parameter)
    if _is_rarefaction_branch(family, parameter):
        return _rarefaction_in_density(u0, family, rho, g)[0]
    return hugoniot_locus(u0, family, rho, g)[0]


def curve_strength(u0: State, family, parameter: float, g: GasModel) -> float:
    return curve_point(u0, family, parameter, g)[1]


def parameter_for_strength(u0: State, family, alpha: float, g: GasModel) -> float:
    """Invert the arc-length strength: internal parameter of the wave of strength ``alpha``."""
    family = WaveFamily(family)
    if family.linearly_degenerate or alpha == 0.0:
        return alpha
    du, dv, c2 = _tangent(u0.u, u0.v, u0.p, u0.rho, g.gamma, _sign(family))
    rate = u0.rho * math.sqrt(du * du + dv * dv + c2 * c2 + 1.0)
    # direction in z giving the requested sign of strength
    rarefaction_dir = -1.0 if family is WaveFamily.ONE else 1.0
    direction = rarefaction_dir if alpha > 0.0 else -rarefaction_dir
    target = abs(alpha)

    def excess(t):
        return abs(curve_strength(u0, family, direction * t, g)) - target

    hi = 2.0 * target / rate
    for _ in range(60):
        try:
            if excess(hi) > 0.0:
                break
        except RegimeError:
            hi *= 0.75
            continue
        hi *= 2.0
    else:
        raise RegimeError(f"no {family.label}-wave of strength {alpha:.6g} from this state")
    t = optimize.brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return direction * t


def wave_curve(u0: State, family, alpha: float, g: GasModel) -> State:
    """ψ_j(alpha): the state at signed arc length ``alpha`` along the j-th wave curve."""
    return curve_state(u0, family, parameter_for_strength(u0, family, alpha, g), g)


def wave_speed(left: State, right: State, family, parameter: float, g: GasModel) -> float:
    """Front slope: R–H speed for shocks, right-state characteristic for rarefaction pieces."""
    family = WaveFamily(family)
    if family.linearly_degenerate:
        return left.v / left.u
    if _is_rarefaction_branch(family, parameter):
        return gasdyn.characteristic_speed(right, family, g)
    if family is WaveFamily.ONE:
        return hugoniot_locus(left, 1, right.rho, g)[1]
    return hugoniot_locus(left, 4, right.rho, g)[1]


def describe_wave(left: State, family, parameter: float, g: GasModel, right: State | None = None,
                  strength: float | None = None) -> WaveDescriptor:
    """WaveDescriptor of the family-j wave leaving ``left`` with the given parameter."""
    family = WaveFamily(family)
    if right is None or strength is None:
        right, strength = curve_point(left, family, parameter, g)
    speed = wave_speed(left, right, family, parameter, g)
    return WaveDescriptor(family=family, strength=strength, left_state=left, right_state=right,
                          speed=speed, parameter=parameter)


def rarefaction_path(u0: State, family, parameter: float, g: GasModel, delta: float) -> list[WaveDescriptor]:
    """Split a rarefaction into fronts of strength ≤ ``delta`` (equal steps in log density)."""
    family = WaveFamily(family)
    total = _rarefaction_in_density(u0, family, u0.rho * math.exp(parameter), g)[1]
    pieces = max(1, math.ceil(total / delta))
    for _ in range(8):
        fronts = []
        left = u0
        for k in range(1, pieces + 1):
            z_k = parameter * k / pieces
            rho_k = u0.rho * math.exp(z_k)
            n_steps = max(16, math.ceil(MIN_RAREFACTION_STEPS / pieces),
                          math.ceil(abs(parameter) / pieces * STEPS_PER_LOG_DENSITY))
            right, length = _rarefaction_in_density(left, family, rho_k, g, n_steps)
            z_piece = math.log(rho_k / left.rho)
            fronts.append(WaveDescriptor(family=family, strength=length, left_state=left, right_state=right,
                                         speed=gasdyn.characteristic_speed(right, family, g),
                                         parameter=z_piece))
            left = right
        if max(f.strength for f in fronts) <= delta * (1.0 + 1e-9):
            return fronts
        pieces += 1
    return fronts


# ---------------------------------------------------------------------------
# Admissibility
# ---------------------------------------------------------------------------

def admissible(w: WaveDescriptor, g: GasModel) -> Admissibility:
    """Entropy and Lax conditions for a 1- or 4-shock (including the strong shock)."""
    if not w.is_shock:
        raise WaveKindError(f"admissibility applies to shocks only, got family {w.family.label} "
                            f"with strength {w.strength:.6g}")
    if w.family is WaveFamily.ONE:
        front, back = w.left_state, w.right_state
    else:
        front, back = w.right_state, w.left_state
    if abs(back.rho - front.rho) <= DEGENERATE_TOLERANCE * front.rho:
        return Admissibility(True, "degenerate")
    if not front.rho < back.rho:
        return Admissibility(False, "density decreases across the shock")
    j = int(w.family)
    s = w.speed
    lam_back = gasdyn.characteristic_speed(back, j, g)
    lam_front = gasdyn.characteristic_speed(front, j, g)
    if j == 1:
        if not lam_back < s:
            return Admissibility(False, f"Lax: λ1(back)={lam_back:.6g} ≥ s={s:.6g}")
        if not s < lam_front:
            return Admissibility(False, f"Lax: s={s:.6g} ≥ λ1(front)={lam_front:.6g}")
        if not s < back.v / back.u:
            return Admissibility(False, f"Lax: s={s:.6g} ≥ λ23(back)={back.v / back.u:.6g}")
        return Admissibility(True, "admissible")
    # 4-shocks are the mirror image (y → −y) of 1-shocks
    if not lam_front < s:
        return Admissibility(False, f"Lax: λ4(front)={lam_front:.6g} ≥ s={s:.6g}")
    if not s < lam_back:
        return Admissibility(False, f"Lax: s={s:.6g} ≥ λ4(back)={lam_back:.6g}")
    if not back.v / back.u < s:
        return Admissibility(False, f"Lax: λ23(back)={back.v / back.u:.6g} ≥ s={s:.6g}")
    return Admissibility(True, "admissible")
