"""Independent oracles and residual checks for tracked solutions.

The oblique-shock and Prandtl–Meyer relations are the classical closed forms and
share no code with the wave curves they are used to check.
"""

import logging
import itertools
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy import optimize

from wedgeflow.errors import RegimeError, StructuralFailure
from wedgeflow.models import (
    BoundaryRiemannInput,
    ConvergenceRow,
    ConvergenceTable,
    GasModel,
    History,
    ObliqueBranch,
    ObliqueShockSolution,
    OracleCheck,
    ResidualReport,
    RunConfig,
)
from wedgeflow.services import functionals, gasdyn, riemann, tracking

logger = logging.getLogger(__name__)

BISECT_XTOL = 1e-15
DETACHMENT_SCAN_STEP = math.radians(0.1)
DETACHMENT_RESOLUTION = math.radians(1e-4)


# ---------------------------------------------------------------------------
# Oblique shocks
# ---------------------------------------------------------------------------

def theta_beta_mach(beta: float, mach: float, g: GasModel) -> float:
    """Deflection θ(β) of the θ–β–M relation."""
    m2s = (mach * math.sin(beta)) ** 2
    return math.atan(2.0 / math.tan(beta) * (m2s - 1.0) / (mach * mach * (g.gamma + math.cos(2.0 * beta)) + 2.0))


def _beta_at_max_deflection(mach: float, g: GasModel) -> float:
    gm = g.gamma
    m2 = mach * mach
    root = math.sqrt((gm + 1.0) * ((gm + 1.0) * m2 * m2 / 16.0 + (gm - 1.0) * m2 / 2.0 + 1.0))
    return math.asin(math.sqrt(((gm + 1.0) * m2 / 4.0 - 1.0 + root) / (gm * m2)))


def max_deflection_angle(mach: float, g: GasModel) -> float:
    """θ_max(M): the largest deflection an attached oblique shock supports."""
    if mach <= 1.0:
        return 0.0
    return theta_beta_mach(_beta_at_max_deflection(mach, g), mach, g)


def _branch(mach: float, theta: float, beta: float, g: GasModel) -> ObliqueBranch:
    gm = g.gamma
    mn2 = (mach * math.sin(beta)) ** 2
    pressure = 1.0 + 2.0 * gm / (gm + 1.0) * (mn2 - 1.0)
    density = (gm + 1.0) * mn2 / ((gm - 1.0) * mn2 + 2.0)
    mn2_down = (1.0 + 0.5 * (gm - 1.0) * mn2) / (gm * mn2 - 0.5 * (gm - 1.0))
    return ObliqueBranch(beta=beta, pressure_ratio=pressure, density_ratio=density,
                         mach=math.sqrt(mn2_down) / math.sin(beta - theta))


def oblique_shock(mach: float, theta: float, g: GasModel) -> ObliqueShockSolution:
    """Weak and strong shock angles for a wedge deflection ``theta`` (radians)."""
    if mach <= 1.0:
        raise ValueError(f"oblique shocks need a supersonic Mach number, got {mach}")
    if theta < 0.0:
        raise ValueError("deflection must be non-negative")
    mu = math.asin(1.0 / mach)
    if theta == 0.0:
        return ObliqueShockSolution(mach=mach, theta=theta, detached=False,
                                    weak=_branch(mach, 0.0, mu, g), strong=_branch(mach, 0.0, 0.5 * math.pi, g))
    beta_max = _beta_at_max_deflection(mach, g)
    if theta > theta_beta_mach(beta_max, mach, g):
        return ObliqueShockSolution(mach=mach, theta=theta, detached=True)

    def residual(beta):
        return theta_beta_mach(beta, mach, g) - theta

    weak = optimize.bisect(residual, mu, beta_max, xtol=BISECT_XTOL)
    strong = optimize.bisect(residual, beta_max, 0.5 * math.pi, xtol=BISECT_XTOL)
    return ObliqueShockSolution(mach=mach, theta=theta, detached=False,
                                weak=_branch(mach, theta, weak, g), strong=_branch(mach, theta, strong, g))


# ---------------------------------------------------------------------------
# Prandtl–Meyer expansions
# ---------------------------------------------------------------------------

def prandtl_meyer(mach: float, g: GasModel) -> float:
    """ν(M) in radians."""
    if mach < 1.0:
        raise ValueError(f"Prandtl-Meyer function needs M >= 1, got {mach}")
    gm = g.gamma
    k = math.sqrt((gm + 1.0) / (gm - 1.0))
    root = math.sqrt(mach * mach - 1.0)
    return k * math.atan(root / k) - math.atan(root)


def inverse_prandtl_meyer(nu: float, g: GasModel) -> float:
    """Mach number with ν(M) = ``nu``."""
    gm = g.gamma
    nu_max = 0.5 * math.pi * (math.sqrt((gm + 1.0) / (gm - 1.0)) - 1.0)
    if not 0.0 <= nu < nu_max:
        raise ValueError(f"nu must lie in [0, {nu_max:.6g}), got {nu}")
    if nu == 0.0:
        return 1.0
    hi = 2.0
    while prandtl_meyer(hi, g) < nu:
        hi *= 2.0
    return optimize.bisect(lambda m: prandtl_meyer(m, g) - nu, 1.0, hi, xtol=1e-14, rtol=1e-15)


# ---------------------------------------------------------------------------
# Detachment
# ---------------------------------------------------------------------------

def _vertex_attaches(mach: float, theta: float, g: GasModel) -> bool:
    state = gasdyn.uniform_state(mach, theta, g)
    if not gasdyn.is_x_supersonic(state, g):
        return False
    problem = BoundaryRiemannInput(state=state, omega=-theta, normal_next=(0.0, 1.0))
    try:
        fan = riemann.solve_boundary_vertex(problem, g)
    except (StructuralFailure, RegimeError):
        return False
    return fan.empty or gasdyn.is_x_supersonic(fan.above, g)


def detachment_angle(mach: float, g: GasModel) -> float:
    """Largest inflow angle (radians) the vertex solver still resolves with an attached shock."""
    lo = 0.0
    hi = DETACHMENT_SCAN_STEP
    while _vertex_attaches(mach, hi, g):
        lo = hi
        hi += DETACHMENT_SCAN_STEP
        if hi >= 0.5 * math.pi:
            return lo
    while hi - lo > DETACHMENT_RESOLUTION:
        mid = 0.5 * (lo + hi)
        if _vertex_attaches(mach, mid, g):
            lo = mid
        else:
            hi = mid
    logger.debug("detachment at M=%g, gamma=%g: %.6f deg", mach, g.gamma, math.degrees(lo))
    return lo


# ---------------------------------------------------------------------------
# Self-test
# ---------------------------------------------------------------------------

ORACLE_MACHS = (1.5, 2.0, 3.0, 5.0)
ORACLE_DEFLECTIONS = (0.0, 5.0, 10.0, 15.0, 20.0)
ORACLE_EXPANSIONS = (1.0, 5.0, 10.0)


def oracle_suite(g: GasModel, tolerance: float = 1e-8) -> list[OracleCheck]:
    """Closed-form relations against themselves and against the tracker's solvers.

    Angles in the returned checks are degrees.
    """
    checks = []
    for mach in ORACLE_MACHS:
        theta_max = max_deflection_angle(mach, g)
        for degrees in ORACLE_DEFLECTIONS:
            theta = math.radians(degrees)
            if theta >= theta_max:
                continue
            sol = oblique_shock(mach, theta, g)
            for name, branch in (("theta-beta-mach weak", sol.weak), ("theta-beta-mach strong", sol.strong)):
                measured = theta_beta_mach(branch.beta, mach, g)
                checks.append(OracleCheck(check=name, mach=mach, angle=degrees, expected=theta, measured=measured,
                                          residual=abs(measured - theta), tolerance=tolerance))
            if theta == 0.0:
                continue
            state = gasdyn.uniform_state(mach, theta, g)
            problem = BoundaryRiemannInput(state=state, omega=-theta, normal_next=(0.0, 1.0))
            fan = riemann.solve_boundary_vertex(problem, g, 1.0)
            shock = fan.waves[0]
            beta = theta - math.atan(shock.speed)
            checks.append(OracleCheck(check="vertex shock angle", mach=mach, angle=degrees,
                                      expected=sol.weak.beta, measured=beta,
                                      residual=abs(beta - sol.weak.beta) / sol.weak.beta, tolerance=tolerance))
            checks.append(OracleCheck(check="vertex wall tangency", mach=mach, angle=degrees, expected=0.0,
                                      measured=fan.above.flow_angle, residual=abs(fan.above.flow_angle),
                                      tolerance=tolerance))
            ratio = shock.right_state.p / shock.left_state.p
            checks.append(OracleCheck(check="vertex pressure ratio", mach=mach, angle=degrees,
                                      expected=sol.weak.pressure_ratio, measured=ratio,
                                      residual=abs(ratio - sol.weak.pressure_ratio) / sol.weak.pressure_ratio,
                                      tolerance=tolerance))

    for mach in np.linspace(1.01, 5.0, 9):
        mach = float(mach)
        back = inverse_prandtl_meyer(prandtl_meyer(mach, g), g)
        checks.append(OracleCheck(check="prandtl-meyer round trip", mach=mach, angle=0.0, expected=mach,
                                  measured=back, residual=abs(back - mach), tolerance=tolerance))

    for mach in ORACLE_MACHS[1:]:
        state = gasdyn.uniform_state(mach, 0.0, g)
        nu0 = prandtl_meyer(mach, g)
        for degrees in ORACLE_EXPANSIONS:
            turn = math.radians(degrees)
            _, turned = riemann.turn_flow(state, turn, g)
            gained = prandtl_meyer(gasdyn.mach_number(turned, g), g) - nu0
            checks.append(OracleCheck(check="expansion turn", mach=mach, angle=degrees, expected=turn,
                                      measured=gained, residual=abs(gained - turn), tolerance=tolerance))

    failed = sum(not c.passed for c in checks)
    logger.info("oracle suite: %d checks, %d above tolerance %g", len(checks), failed, tolerance)
    return checks


# ---------------------------------------------------------------------------
# Closed-path residuals
# ---------------------------------------------------------------------------

def _crossings(history: History, p0, p1) -> list[float]:
    """Segment parameters t ∈ (0, 1) where the solution along p0→p1 may jump."""
    (x0, y0), (x1, y1) = p0, p1
    dx, dy = x1 - x0, y1 - y0
    ts = {0.0, 1.0}
    stations = [fs.x for fs in history.snapshots]
    xa, xb = min(x0, x1), max(x0, x1)
    if dx != 0.0:
        ts.update((s - x0) / dx for s in stations if xa < s < xb)
    bounds = stations + [math.inf]
    for k, fs in enumerate(history.snapshots):
        lo, hi = max(bounds[k], xa), min(bounds[k + 1], xb)
        if hi < lo:
            continue
        for f in fs.fronts:
            denom = dy - f.slope * dx
            if denom == 0.0:
                continue
            t = (f.y0 + f.slope * (x0 - f.x0) - y0) / denom
            if 0.0 < t < 1.0 and lo <= x0 + t * dx <= hi:
                ts.add(t)
    return sorted(ts)


def _segment_flux(history: History, p0, p1, g: GasModel, wall: bool = False):
    """Exact ∫(W dy − H dx) and ∫(ρuS dy − ρvS dx) along p0→p1 on the tracked solution."""
    (x0, y0), (x1, y1) = p0, p1
    dx, dy = x1 - x0, y1 - y0
    flux = np.zeros(4)
    entropy = 0.0
    peak = 0.0
    ts = _crossings(history, p0, p1)
    for ta, tb in zip(ts[:-1], ts[1:], strict=True):
        if tb <= ta:
            continue
        tm = 0.5 * (ta + tb)
        xm, ym = x0 + tm * dx, y0 + tm * dy
        fs = history.frontset_at(xm)
        state = fs.wall_state if wall else fs.states[fs.locate(ym, xm)]
        ddx, ddy = (tb - ta) * dx, (tb - ta) * dy
        w, h = gasdyn.flux_arrays(state, g)
        peak = max(peak, float(np.max(np.abs(w))), float(np.max(np.abs(h))))
        if wall:
            flux += np.array([0.0, state.p * ddy, -state.p * ddx, 0.0])
            continue
        flux += w * ddy - h * ddx
        eu, ev = gasdyn.entropy_flux(state, g)
        entropy += eu * ddy - ev * ddx
    return flux, entropy, peak


def _front_measure(history: History, rect, select) -> float:
    """Σ strength × x-length of the selected fronts inside ``rect``."""
    x0, x1, y0, y1 = rect
    stations = [fs.x for fs in history.snapshots] + [math.inf]
    total = 0.0
    for k, fs in enumerate(history.snapshots):
        lo, hi = max(stations[k], x0), min(stations[k + 1], x1)
        if hi <= lo:
            continue
        for f in fs.fronts:
            if not select(f):
                continue
            a, b = lo, hi
            if f.slope != 0.0:
                xa = f.x0 + (y0 - f.y0) / f.slope
                xb = f.x0 + (y1 - f.y0) / f.slope
                a, b = max(a, min(xa, xb)), min(b, max(xa, xb))
            elif not y0 <= f.y0 <= y1:
                continue
            if b > a:
                total += abs(f.strength) * (b - a)
    return total


def conservation_residual(history: History, rect) -> ResidualReport:
    """∮(W dy − H dx) counterclockwise around ``rect`` = (x0, x1, y0, y1).

    Where the rectangle reaches above the wall the top edge follows the wall, on
    which only the pressure flux acts.
    """
    g = history.config.gas
    boundary = history.boundary
    x0, x1, y0, y1 = rect
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate rectangle {rect}")

    # top edge: y1 where below the wall, the wall polyline elsewhere
    xs = {x0, x1}
    xs.update(a for a, _ in boundary.vertices if x0 < a < x1)
    for k in range(len(boundary.vertices)):
        slope = boundary.face_slope(k)
        if slope != 0.0:
            xc = boundary.vertices[k][0] + (y1 - boundary.vertices[k][1]) / slope
            if x0 < xc < x1:
                xs.add(xc)
    xs = sorted(xs)
    top = [(x, min(y1, boundary.g(x))) for x in xs]
    if min(y for _, y in top) <= y0:
        raise ValueError("rectangle bottom lies above the wall")

    path = [((x0, y0), (x1, y0), False), ((x1, y0), top[-1], False)]
    for (xa, ya), (xb, yb) in zip(reversed(top[1:]), reversed(top[:-1]), strict=True):
        on_wall = boundary.g(0.5 * (xa + xb)) < y1
        path.append(((xa, ya), (xb, yb), on_wall))
    path.append((top[0], (x0, y0), False))

    residual = np.zeros(4)
    entropy = 0.0
    peak = 0.0
    perimeter = 0.0
    for p0, p1, wall in path:
        f, e, m = _segment_flux(history, p0, p1, g, wall=wall)
        residual += f
        entropy += e
        peak = max(peak, m)
        perimeter += math.hypot(p1[0] - p0[0], p1[1] - p0[1])
    scale = max(peak * perimeter, 1e-300)
    return ResidualReport(
        rect=(x0, x1, y0, y1), residual=tuple(float(r) for r in residual),
        relative=float(np.max(np.abs(residual))) / scale, entropy=float(entropy),
        nonphysical_measure=_front_measure(history, rect, lambda f: f.nonphysical),
        rarefaction_measure=_front_measure(history, rect, lambda f: f.descriptor.is_rarefaction),
        scale=scale,
    )


# ---------------------------------------------------------------------------
# Convergence
# ---------------------------------------------------------------------------

def fit_rate(eps, distances) -> float | None:
    """Slope of log(distance) against log(ε); None with fewer than two positive distances."""
    pairs = [(e, d) for e, d in zip(eps, distances, strict=True) if d > 0.0]
    if len(pairs) < 2:
        return None
    slope, _ = np.polyfit(np.log([e for e, _ in pairs]), np.log([d for _, d in pairs]), 1)
    return float(slope)


def _run_at(cfg: RunConfig) -> History:
    return tracking.run(cfg)


def convergence_study(cfg: RunConfig, eps_list, station: float | None = None,
                      workers: int = 1) -> tuple[ConvergenceTable, list[History]]:
    """L1 distances between every pair of runs; the rate is fitted on the distances to the finest run."""
    eps_list = [float(e) for e in eps_list]
    if any(b > a for a, b in zip(eps_list, eps_list[1:], strict=False)):
        raise ValueError("eps_list must be non-increasing")
    station = cfg.tracking.x_max if station is None else station
    configs = [cfg.with_eps(e) for e in eps_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            histories = list(pool.map(_run_at, configs))
    else:
        histories = [_run_at(c) for c in configs]

    rows = []
    for i, j in itertools.combinations(range(len(histories)), 2):
        h_a, h_b = histories[i], histories[j]
        y_low = min(tracking.y_bottom(h_a) - h_a.lambda_hat * station,
                    tracking.y_bottom(h_b) - h_b.lambda_hat * station)
        distance = functionals.l1_distance(h_a.frontset_at(station), h_b.frontset_at(station), h_a.boundary, y_low)
        rows.append(ConvergenceRow(eps_coarse=eps_list[i], eps_fine=eps_list[j], l1=distance, coarse=i, fine=j))
        logger.info("eps %g -> %g: L1 distance %.6e at x=%g", eps_list[i], eps_list[j], distance, station)
    # the finest run stands in for the limit
    finest = len(histories) - 1
    to_finest = [r for r in rows if r.fine == finest]
    table = ConvergenceTable(
        station=station, rows=tuple(rows),
        slope=fit_rate([r.eps_coarse for r in to_finest], [r.l1 for r in to_finest]),
        nonphysical=tuple(functionals.nonphysical_total(h.frontset_at(station)) for h in histories),
        event_counts=tuple(len(h.events) for h in histories),
    )
    return table, histories
