"""Bookkeeping functionals of a tracked solution.

Weak fronts are weighted by k_− below (ahead of) the strong shock and by 1 above it.
Nonphysical fronts take part as a fifth, fastest family: they approach every
physical front above them, the strong shock from below and the wall from above.
Above the shock every front that can still reach the wall carries a wall weight:
1 for 4-waves, k_c for contacts and k_np for nonphysical fronts, which leave
through the wall without reflecting.
"""

import logging
import math

import msgspec
import numpy as np

from wedgeflow.errors import RiemannSolveError, StructuralFailure, WaveKindError
from wedgeflow.models import (
    Background,
    BoundaryEstimate,
    BoundaryRiemannInput,
    CoefficientTable,
    Event,
    EventVerdict,
    FrontSet,
    FunctionalConstants,
    GasModel,
    GlimmReport,
    LyapunovCell,
    LyapunovReport,
    PotentialBreakdown,
    State,
    StepOutcome,
    WaveDescriptor,
    WaveFamily,
    WedgeBoundary,
)
from wedgeflow.services import riemann, waves

logger = logging.getLogger(__name__)

MONITOR_SLACK = 1e-13
PROBE_STEP = 1e-5
WEAK_PROBE_STEP = 1e-3
KAPPA_SAFETY = 1.5
KAPPA_FLOOR = 0.1
SMALLNESS_LIMIT = 0.5
CONTACT_FLOOR = 0.1
NONPHYSICAL_SHARE = 0.25
MARGIN_SHARE = 0.1

_NP = int(WaveFamily.NONPHYSICAL)


# ---------------------------------------------------------------------------
# Glimm functional
# ---------------------------------------------------------------------------

def weighted_strength(w: WaveDescriptor, region: str, k_minus: float) -> float:
    """b_α: the strength, times k_− in the region ahead of the strong shock."""
    if w.strong:
        raise WaveKindError("the strong shock has no weighted strength")
    if region == "minus":
        return k_minus * w.strength
    if region == "plus":
        return w.strength
    raise ValueError(f"region must be 'minus' or 'plus', got {region!r}")


def _weak_fronts(fs: FrontSet, k_minus: float):
    """(family, |b|, region, is_shock) of every weak front, bottom to top."""
    out = []
    for i, f in enumerate(fs.fronts):
        if f.strong:
            continue
        region = fs.region(i)
        out.append((int(f.family), abs(weighted_strength(f.descriptor, region, k_minus)), region,
                    f.descriptor.is_shock))
    return out


def _wall_weight(family: int, consts: FunctionalConstants) -> float:
    if family == 4:
        return 1.0
    if family == _NP:
        return consts.k_nonphysical
    return consts.k_contact


def potential(fs: FrontSet, boundary: WedgeBoundary, consts: FunctionalConstants) -> PotentialBreakdown:
    """Q = Q_A + Q_1 + Q_b + Q_w."""
    weak = _weak_fronts(fs, consts.k_minus)

    # running sums of |b| below the current front, per region and family
    below = {"minus": [0.0] * (_NP + 1), "plus": [0.0] * (_NP + 1)}
    below_rarefaction = {"minus": [0.0] * (_NP + 1), "plus": [0.0] * (_NP + 1)}
    q_pairs = 0.0
    for family, b, region, shock in weak:
        sums = below[region]
        faster = sum(sums[family + 1:])
        same = 0.0
        if family in (1, 4):
            same = sums[family] if shock else sums[family] - below_rarefaction[region][family]
        q_pairs += b * (faster + same)
        sums[family] += b
        if family in (1, 4) and not shock:
            below_rarefaction[region][family] += b

    q_one = sum(b for family, b, region, _ in weak if region == "minus" or family == 1)
    q_wall = sum(_wall_weight(family, consts) * b for family, b, region, _ in weak
                 if region == "plus" and family != 1)
    return PotentialBreakdown(
        q_approach=consts.c_star * q_pairs,
        q_strong=consts.k_star * q_one,
        q_boundary=q_wall,
        q_wedge=consts.k_b0_tilde * boundary.remaining_turning(fs.x),
    )


def total_variation(fs: FrontSet, k_minus: float) -> float:
    """V = Σ|b_α| over weak fronts."""
    return sum(b for _, b, _, _ in _weak_fronts(fs, k_minus))


def nonphysical_total(fs: FrontSet) -> float:
    return sum(f.strength for f in fs.fronts if f.nonphysical)


def glimm(fs: FrontSet, boundary: WedgeBoundary, consts: FunctionalConstants,
          background: Background | None = None) -> GlimmReport:
    """F = V + κQ + |U* − U0+| + |U_* − U0−|."""
    V = total_variation(fs, consts.k_minus)
    Q = potential(fs, boundary, consts)
    F = V + consts.kappa * Q.total
    u_star = u_sub = None
    strong = fs.strong_front
    if strong is not None:
        u_sub, u_star = strong.descriptor.left_state, strong.descriptor.right_state
        if background is not None:
            F += u_star.distance(background.u_plus) + u_sub.distance(background.u_minus)
    return GlimmReport(x=fs.x, V=V, Q=Q, F=F, u_star=u_star, u_sub=u_sub, nonphysical=nonphysical_total(fs))


def event_measure(outcome: StepOutcome, consts: FunctionalConstants) -> float:
    """|b_α b_β| for weak-weak, |b_α| for weak-strong and wall hits, |ω_k| at a vertex."""
    kind = outcome.event.kind
    if kind == "boundary-vertex":
        return abs(outcome.omega)
    weights = [abs(weighted_strength(w, region if region != "strong" else "plus", consts.k_minus))
               for w, region in zip(outcome.incoming, outcome.incoming_regions, strict=True) if not w.strong]
    if kind == "weak-weak":
        return weights[0] * weights[1]
    return weights[0]


def monitor_event(before: GlimmReport, after: GlimmReport, ev: Event, measure: float,
                  c: float) -> EventVerdict:
    """Check ΔQ ≤ −c·measure and ΔF ≤ 0 across one event; never raises."""
    delta_q = after.Q.total - before.Q.total
    delta_f = after.F - before.F
    bound = -c * measure
    q_ok = delta_q <= bound + MONITOR_SLACK * max(1.0, before.Q.total)
    f_ok = delta_f <= MONITOR_SLACK * max(1.0, before.F)
    passed = q_ok and f_ok
    detail = ""
    if not passed:
        broken = ",".join(name for name, ok in (("dQ", q_ok), ("dF", f_ok)) if not ok)
        detail = (f"{ev.kind} at x={ev.x:.9g} y={ev.y:.9g} participants={list(ev.participants)} "
                  f"violates {broken}")
    return EventVerdict(passed=passed, delta_F=delta_f, delta_Q=delta_q, measure=measure, bound=bound,
                        detail=detail)


# ---------------------------------------------------------------------------
# Coupled runs
# ---------------------------------------------------------------------------

def _overlay(u_fs: FrontSet, v_fs: FrontSet, x: float, y_low: float, y_top: float):
    """Cells (a, b, iu, iv) of the common refinement of two front sets on [y_low, y_top]."""
    cuts = {y_low, y_top}
    cuts.update(y for y in u_fs.positions(x) if y_low < y < y_top)
    cuts.update(y for y in v_fs.positions(x) if y_low < y < y_top)
    ordered = sorted(cuts)
    for a, b in zip(ordered[:-1], ordered[1:], strict=True):
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        yield a, b, u_fs.locate(mid, x), v_fs.locate(mid, x)


def l1_distance(u_fs: FrontSet, v_fs: FrontSet, boundary: WedgeBoundary, y_low: float) -> float:
    """∫|U(y) − V(y)| dy from ``y_low`` up to the wall, exact on the overlay."""
    x = u_fs.x
    total = 0.0
    for a, b, iu, iv in _overlay(u_fs, v_fs, x, y_low, boundary.g(x)):
        total += u_fs.states[iu].distance(v_fs.states[iv]) * (b - a)
    return total


def _region_pair(u_region: str, v_region: str) -> str:
    if u_region == v_region == "minus":
        return "below"
    if u_region == v_region == "plus":
        return "above"
    return "mixed"


def _strong_deviation(fs: FrontSet, sigma0: float | None) -> float:
    strong = fs.strong_front
    if strong is None or sigma0 is None:
        return 0.0
    return abs(strong.descriptor.speed - sigma0)


_D_TABLE = {
    "below": (1.0, 1.0, 1.0, 1.0),
    "mixed": (0.0, 1.0, 1.0, 1.0),
    "above": (1.0, 0.0, 0.0, 1.0),
}


def _region_weights(consts: FunctionalConstants, pair: str):
    return {"below": consts.c_b, "mixed": consts.c_m, "above": consts.c_a}[pair]


def _weak_list(fs: FrontSet, x: float):
    """(y, family, |α|, both states ahead, both states behind) of every weak front."""
    items = []
    for i, f in enumerate(fs.fronts):
        if f.strong:
            continue
        ahead = fs.strong_index is not None and i < fs.strong_index
        items.append((f.y_at(x), int(f.family), abs(f.strength), ahead, not ahead))
    return items


def _approach_weight(i: int, y: float, q_i: float, pair: str, u_waves, v_waves, deviation: float) -> float:
    """A_i(y) = B_i + D_i + (C_i for small q_i, F_1 for the large 1-wave)."""
    family = i + 1
    b_term = 0.0
    for waves_list in (u_waves, v_waves):
        for y_a, k, strength, _, _ in waves_list:
            if (y_a < y and k > family) or (y_a > y and k < family):
                b_term += strength
    d_term = _D_TABLE[pair][i] * deviation
    if pair == "mixed" and family == 1:
        f_term = 0.0
        for waves_list in (u_waves, v_waves):
            for y_a, k, strength, ahead, behind in waves_list:
                if k == 1 and ((y_a < y and ahead) or (y_a > y and behind)):
                    f_term += strength
        return b_term + d_term + f_term
    lower, upper = (u_waves, v_waves) if q_i < 0 else (v_waves, u_waves)
    c_term = sum(s for y_a, k, s, _, _ in lower if y_a < y and k == family)
    c_term += sum(s for y_a, k, s, _, _ in upper if y_a > y and k == family)
    return b_term + d_term + c_term


def lyapunov(u_fs: FrontSet, v_fs: FrontSet, boundary: WedgeBoundary, consts: FunctionalConstants,
             g: GasModel, y_low: float, sigma0: float | None = None) -> LyapunovReport:
    """Φ(U, V) = Σ_i ∫ |q_i| W_i dy between two runs at the same station."""
    x = u_fs.x
    if v_fs.x != x:
        v_fs = v_fs.at(x)
    y_top = boundary.g(x)
    q_sum = potential(u_fs, boundary, consts).total + potential(v_fs, boundary, consts).total
    deviation = max(_strong_deviation(u_fs, sigma0), _strong_deviation(v_fs, sigma0))
    u_waves = _weak_list(u_fs, x)
    v_waves = _weak_list(v_fs, x)

    phi = 0.0
    components = [0.0, 0.0, 0.0, 0.0]
    cells = []
    partial = False
    l1 = 0.0
    for a, b, iu, iv in _overlay(u_fs, v_fs, x, y_low, y_top):
        u_state, v_state = u_fs.states[iu], v_fs.states[iv]
        l1 += u_state.distance(v_state) * (b - a)
        if u_state == v_state:
            continue
        u_region, v_region = u_fs.state_region(iu), v_fs.state_region(iv)
        pair = _region_pair(u_region, v_region)
        start, end = (v_state, u_state) if (u_region == "plus" and v_region == "minus") else (u_state, v_state)
        guess = (math.log(end.rho / start.rho), 0.0, 0.0, 0.0) if pair == "mixed" else None
        try:
            p, _ = riemann.connect_hugoniot(start, end, g, guess)
        except (RiemannSolveError, ValueError, ArithmeticError) as exc:
            logger.warning("Hugoniot connection failed on [%.6g, %.6g] at x=%.6g: %s", a, b, x, exc)
            partial = True
            cells.append(LyapunovCell(y_lo=a, y_hi=b, region=pair, q=(0.0,) * 4, weights=(0.0,) * 4,
                                      flagged=True))
            continue
        c = _region_weights(consts, pair)
        q = tuple(c[i] * p[i] for i in range(4))
        mid = 0.5 * (a + b)
        w = tuple(1.0 + consts.kappa1 * _approach_weight(i, mid, q[i], pair, u_waves, v_waves, deviation)
                  + consts.kappa2 * q_sum for i in range(4))
        for i in range(4):
            contribution = abs(q[i]) * w[i] * (b - a)
            components[i] += contribution
            phi += contribution
        cells.append(LyapunovCell(y_lo=a, y_hi=b, region=pair, q=q, weights=w))
    return LyapunovReport(x=x, phi=phi, components=tuple(components), l1=l1, cells=tuple(cells), partial=partial,
                          boundary=boundary_estimate(u_fs, v_fs, boundary, g))


def boundary_estimate(u_fs: FrontSet, v_fs: FrontSet, boundary: WedgeBoundary,
                      g: GasModel) -> BoundaryEstimate | None:
    """Riemann connection between the two wall-adjacent states.

    Returns |p4|/|p1| and |λ23 − ẏ_b|/|p1|; None when the connection fails.
    """
    a, b = u_fs.wall_state, v_fs.wall_state
    slope = boundary.face_slope(u_fs.face_index)
    if a == b:
        return BoundaryEstimate(p1=0.0, p4=0.0, lambda_gap=abs(a.v / a.u - slope), ratio_p4=0.0, ratio_lambda=0.0)
    try:
        p, middle = riemann.connect_hugoniot(a, b, g)
    except (RiemannSolveError, ValueError, ArithmeticError) as exc:
        logger.warning("wall connection failed at x=%.6g: %s", u_fs.x, exc)
        return None
    gap = abs(middle[0].v / middle[0].u - slope)
    p1, p4 = abs(p[0]), abs(p[3])
    if p1 > 0.0:
        ratio_p4, ratio_lambda = p4 / p1, gap / p1
    else:
        ratio_p4 = 0.0 if p4 < 1e-14 else math.inf
        ratio_lambda = 0.0 if gap < 1e-14 else math.inf
    return BoundaryEstimate(p1=p[0], p4=p[3], lambda_gap=gap, ratio_p4=ratio_p4, ratio_lambda=ratio_lambda)


# ---------------------------------------------------------------------------
# Interaction coefficients
# ---------------------------------------------------------------------------

def _incoming_from_below(above: State, family: int, h: float, g: GasModel) -> tuple[State, float]:
    """State below a weak wave of the given family ending on ``above``, and its strength."""
    below = waves.curve_state(above, family, -h, g)
    fan = riemann.solve_accurate(below, above, g, 1.0)
    return below, fan.strengths[family - 1]


def _approaching_families(same_family: bool = True):
    """(lower, upper) family pairs that can collide, the lower one being faster."""
    for lower in (1, 2, 3, 4):
        for upper in (1, 2, 3, 4):
            if lower > upper or (same_family and lower == upper and lower in (1, 4)):
                yield lower, upper


def weak_interaction_bound(state: State, g: GasModel, h: float = WEAK_PROBE_STEP) -> float:
    """Sampled M0 with |outgoing − incoming| ≤ M0·|αβ| for weak-weak interactions near ``state``."""
    worst = 0.0
    for lower, upper in _approaching_families():
        for sign_a in (1.0, -1.0):
            for sign_b in (1.0, -1.0):
                middle, alpha = waves.curve_point(state, lower, sign_a * h, g)
                right, beta = waves.curve_point(middle, upper, sign_b * h, g)
                fan = riemann.solve_accurate(state, right, g, 1.0)
                incoming = [0.0, 0.0, 0.0, 0.0]
                incoming[upper - 1] += beta
                incoming[lower - 1] += alpha
                error = max(abs(o - i) for o, i in zip(fan.strengths, incoming, strict=True))
                worst = max(worst, error / abs(alpha * beta))
    return worst


def simplified_interaction_bound(state: State, g: GasModel, h: float = WEAK_PROBE_STEP) -> float:
    """Sampled M_s bounding the strength change of the simplified weak solver by M_s·|αβ|.

    Covers pairs of physical waves and a nonphysical jump of size h along each
    coordinate crossing a physical wave.
    """
    worst = 0.0
    for lower, upper in _approaching_families(same_family=False):
        for sign_a in (1.0, -1.0):
            for sign_b in (1.0, -1.0):
                alpha = waves.describe_wave(state, lower, sign_a * h, g)
                beta = waves.describe_wave(alpha.right_state, upper, sign_b * h, g)
                fan = riemann.solve_simplified_weak(alpha, beta, 1.0, g)
                change = (abs(fan.waves[0].strength - beta.strength) + abs(fan.waves[1].strength - alpha.strength)
                          + fan.nonphysical_strength)
                worst = max(worst, change / abs(alpha.strength * beta.strength))
    for k in range(4):
        for sign in (1.0, -1.0):
            jump = riemann.nonphysical_wave(state, State.from_array(state.as_array() + sign * h * np.eye(4)[k]), 1.0)
            for family in (1, 2, 3, 4):
                for sign_b in (1.0, -1.0):
                    beta = waves.describe_wave(jump.right_state, family, sign_b * h, g)
                    fan = riemann.solve_simplified_weak(jump, beta, 1.0, g)
                    change = abs(fan.waves[0].strength - beta.strength) + abs(fan.nonphysical_strength - jump.strength)
                    worst = max(worst, change / abs(jump.strength * beta.strength))
    return worst


def shock_lipschitz(u_minus: State, sigma: float, g: GasModel, h: float = PROBE_STEP) -> float:
    """Spectral norm of the finite-difference Jacobian of U− ↦ G(U−, σ)."""
    base = waves.strong_shock_from_speed(u_minus, sigma, g).as_array()
    jacobian = np.empty((4, 4))
    for k in range(4):
        shifted = State.from_array(u_minus.as_array() + h * np.eye(4)[k])
        jacobian[:, k] = (waves.strong_shock_from_speed(shifted, sigma, g).as_array() - base) / h
    return float(np.linalg.norm(jacobian, 2))


def probe_coefficients(background: Background, g: GasModel, h: float = PROBE_STEP) -> CoefficientTable:
    """Finite-difference interaction coefficients at the unperturbed strong shock."""
    u_minus, u_plus, sigma0 = background.u_minus, background.u_plus, background.sigma0
    wall = (0.0, 1.0)

    # a weak wave reaching the wall from below reflects as a 1-wave
    reflections = {}
    for family in (2, 3, 4):
        below, strength = _incoming_from_below(u_plus, family, h, g)
        fan = riemann.solve_boundary_reflection(below, u_plus, wall, g, 1.0)
        reflections[family] = fan.strengths[0] / strength
    omega = h
    problem = BoundaryRiemannInput(state=u_plus, omega=omega, normal_next=(-math.sin(omega), math.cos(omega)))
    vertex = riemann.solve_boundary_vertex(problem, g, 1.0)
    k_b0 = vertex.strengths[0] / omega

    # the strong shock turned at the vertex
    _, turned = riemann.turn_flow(u_minus, h, g)
    sigma_turned = waves.hugoniot_locus(u_minus, 1, turned.rho, g)[1]
    k_bs = (sigma_turned - sigma0) / h

    # a weak 1-wave catching the strong shock from behind
    ahead_state, alpha = waves.curve_point(u_plus, 1, h, g)
    fan = riemann.solve_strong(u_minus, ahead_state, g, 1.0, sigma_guess=sigma0)
    k_s = ((fan.strengths[0] - sigma0) / alpha, fan.strengths[1] / alpha, fan.strengths[2] / alpha,
           fan.strengths[3] / alpha)
    shift_above = fan.middle_states[0].distance(u_plus) / abs(alpha)

    # weak waves hitting the strong shock from ahead
    k_weak = []
    shift_below = []
    for family in (1, 2, 3, 4):
        below, strength = _incoming_from_below(u_minus, family, h, g)
        fan = riemann.solve_strong(below, u_plus, g, 1.0, sigma_guess=sigma0)
        k_weak.append(((fan.strengths[0] - sigma0) / strength, fan.strengths[1] / strength,
                       fan.strengths[2] / strength, fan.strengths[3] / strength))
        shift_below.append(fan.middle_states[0].distance(u_plus) / abs(strength))

    loop_gain = abs(k_s[3] * reflections[4])
    table = CoefficientTable(
        k_b4=reflections[4], k_b3=reflections[3], k_b2=reflections[2], k_b0=k_b0, k_bs=k_bs, k_s=k_s,
        k_weak=tuple(k_weak), shift_above=shift_above, shift_below=tuple(shift_below),
        weak_bound=max(weak_interaction_bound(u_plus, g), weak_interaction_bound(u_minus, g)),
        reflection_margin=1.0 - loop_gain,
        simplified_bound=max(simplified_interaction_bound(u_plus, g), simplified_interaction_bound(u_minus, g)),
        shock_lipschitz=shock_lipschitz(u_minus, sigma0, g),
    )
    logger.info("probed coefficients: K_b4=%.6g K_s4=%.6g K_b0=%.6g K_bs=%.6g margin=%.6g M=%.6g L_G=%.6g",
                table.k_b4, k_s[3], k_b0, k_bs, table.reflection_margin,
                max(table.weak_bound, table.simplified_bound), table.shock_lipschitz)
    if abs(k_s[3]) >= 1.0:
        raise StructuralFailure(f"|K_s4| = {abs(k_s[3]):.6g} ≥ 1: background outside the stable regime",
                                context={"k_s4": k_s[3]})
    return table


def wall_variation(table: CoefficientTable, variation: float, turning: float) -> float:
    """Estimated bound on the total strength above the strong shock during a run.

    Waves enter that region through the shock and at the wall vertices; each
    reflection loop returns at most the fraction 1 − margin of what it received.
    """
    transmitted = max(sum(abs(k) for k in row[1:]) for row in table.k_weak)
    injected = transmitted * variation + abs(table.k_b0) * turning
    return 2.0 * max(1.0, abs(table.k_b4)) * injected / max(table.reflection_margin, 1e-12)


def derive_constants(table: CoefficientTable, base: FunctionalConstants | None = None, variation: float = 0.0,
                     turning: float = 0.0) -> FunctionalConstants:
    """Constants satisfying the ΔQ and ΔF inequalities of every interaction kind.

    ``variation`` is the total unweighted strength of the initial weak fronts and
    ``turning`` the total wall turning. Both enter through the pair terms, which
    must stay small against the linear weights.
    """
    base = base or FunctionalConstants()
    k_b4, k_b0 = abs(table.k_b4), abs(table.k_b0)
    k_b_contact = max(abs(table.k_b2), abs(table.k_b3))
    m = max(table.weak_bound, table.simplified_bound)
    lip = table.shock_lipschitz
    v_plus = wall_variation(table, variation, turning)
    v_pair = max(2.0 * variation, v_plus)
    smallness = 4.0 * m * v_pair
    if smallness >= SMALLNESS_LIMIT:
        raise StructuralFailure(f"initial data too large: 4·M·V = {smallness:.6g} ≥ {SMALLNESS_LIMIT}",
                                context={"interaction_bound": m, "variation": v_pair})
    if smallness > 0.5 * SMALLNESS_LIMIT:
        logger.warning("initial data close to the smallness limit: 4·M·V = %.4g", smallness)

    c_star = max(2.0, 8.0 * m / (1.0 - smallness))
    pair_gain = c_star * v_plus
    k_contact = 2.0 * k_b_contact * (1.0 + pair_gain) + CONTACT_FLOOR

    s_behind = sum(abs(k) for k in table.k_s[1:])
    w_behind = abs(table.k_s[3]) + k_contact * (abs(table.k_s[1]) + abs(table.k_s[2]))
    lower = max(w_behind + pair_gain * s_behind, pair_gain / (1.0 - NONPHYSICAL_SHARE))
    upper = min(1.0, 1.0 / max(k_b4, 1e-12)) - pair_gain
    if lower >= upper:
        raise StructuralFailure(f"no feasible K*: the shock needs K* > {lower:.6g}, the wall K* < {upper:.6g}",
                                context={"k_s4": table.k_s[3], "k_b4": table.k_b4, "pair_gain": pair_gain})
    k_star = 0.5 * (lower + upper)
    k_np = NONPHYSICAL_SHARE * k_star

    ahead = []
    for row, shift in zip(table.k_weak, table.shift_below, strict=True):
        s_j = sum(abs(k) for k in row[1:])
        w_j = abs(row[3]) + k_contact * (abs(row[1]) + abs(row[2]))
        ahead.append((s_j, w_j, shift))
    candidates = [1.0, 2.0 * (1.0 + 2.0 * lip), 2.0 * (k_np + pair_gain) * lip / k_star]
    for s_j, w_j, shift in ahead:
        candidates += [2.0 * (w_j + pair_gain * s_j) / k_star, 2.0 * (s_j + 1.0 + shift)]
    k_minus = max(candidates)
    k_b0_tilde = max(2.0 * k_b0 * (1.0 + k_star + pair_gain), 1e-6)

    # ΔQ ≤ −margin·measure for each interaction kind
    margins = {
        "weak-weak": c_star * (1.0 - smallness) - 4.0 * m,
        "1-wave at the shock": k_star - w_behind - pair_gain * s_behind,
        "nonphysical at the shock": k_star - k_np - pair_gain,
        "nonphysical from ahead": k_star - (k_np + pair_gain) * lip / k_minus,
        "reflection": 1.0 - k_b4 * (k_star + pair_gain),
        "contact reflection": k_contact - k_b_contact * (k_star + pair_gain),
        "wall exit": k_np,
        "vertex": k_b0_tilde - k_b0 * (k_star + pair_gain),
    }
    for j, (s_j, w_j, _) in enumerate(ahead, start=1):
        margins[f"family-{j} from ahead"] = k_star - (w_j + pair_gain * s_j) / k_minus
    tightest = min(margins, key=margins.get)
    if margins[tightest] <= 0.0:
        raise StructuralFailure(f"no margin left for {tightest} interactions", context=dict(margins))

    # κ lets the potential pay for the growth of V and of the shock distances
    gains = [(4.0 * m, margins["weak-weak"]),
             (max(0.0, s_behind + table.shift_above - 1.0), margins["1-wave at the shock"]),
             (max(0.0, k_b4 - 1.0), margins["reflection"]),
             (k_b0, margins["vertex"])]
    kappa = KAPPA_SAFETY * max([KAPPA_FLOOR] + [gain / margin for gain, margin in gains if gain > 0.0])
    c_monitor = min(base.c_monitor, MARGIN_SHARE * margins[tightest])

    # a reflected 1-difference must lose weight at the wall, a 4-difference at the shock
    c_a = list(base.c_a)
    ratio = 0.5 * (abs(table.k_s[3]) + 1.0 / max(k_b4, 1e-12))
    c_a[0] = ratio * c_a[3]
    logger.info("derived constants: K*=%.6g k_-=%.6g C*=%.6g kappa=%.6g (tightest: %s %.3g)", k_star, k_minus,
                c_star, kappa, tightest, margins[tightest])
    return msgspec.structs.replace(base, k_minus=k_minus, c_star=c_star, k_star=k_star, k_b0_tilde=k_b0_tilde,
                                   kappa=kappa, c_monitor=c_monitor, k_contact=k_contact, k_nonphysical=k_np,
                                   c_a=tuple(c_a))


def equivalence_constants(reports) -> tuple[float, float]:
    """(C1, C2) with L1/C1 ≤ Φ ≤ C2·L1 over the given reports."""
    ratios = np.array([r.phi / r.l1 for r in reports if r.l1 > 0.0 and not r.partial])
    if ratios.size == 0:
        return 1.0, 1.0
    return float(1.0 / ratios.min()), float(ratios.max())
