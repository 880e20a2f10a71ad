"""Front tracking in the marching direction x.

A run starts from a piecewise-constant approximation of the inflow at x = 0, solves
the lateral problem at the wedge vertex (which creates the strong 1-shock), then
processes pairwise collisions, wall hits and wall vertices in increasing x.
"""

import heapq
import logging
import math

import msgspec
import numpy as np

from wedgeflow.errors import ConfigError, RegimeError, RiemannSolveError, ShockSolveError, StructuralFailure
from wedgeflow.models import (
    Background,
    BoundaryRiemannInput,
    CoefficientTable,
    Event,
    EventRecord,
    EventVerdict,
    Front,
    FrontSet,
    FunctionalConstants,
    History,
    InflowProfile,
    RunConfig,
    State,
    StepOutcome,
    StrongShock,
    WaveDescriptor,
    WaveFan,
    WedgeBoundary,
)
from wedgeflow.services import functionals, gasdyn, riemann

logger = logging.getLogger(__name__)

JITTER = 1e-12
TINY_STRENGTH = 1e-14
TANGENCY_TOLERANCE = 1e-12
LAMBDA_HAT_FACTOR = 1.2


# ---------------------------------------------------------------------------
# Geometry and initial data
# ---------------------------------------------------------------------------

def build_boundary(vertices) -> WedgeBoundary:
    """Wall through (0, 0) = (a_0, b_0), (a_1, b_1), ...; the first face must be horizontal."""
    vertices = tuple((float(a), float(b)) for a, b in vertices)
    if not vertices or vertices[0] != (0.0, 0.0):
        raise ValueError("the wall must start at the vertex (0, 0)")
    for (a0, _), (a1, _) in zip(vertices, vertices[1:], strict=False):
        if not a1 > a0:
            raise ValueError("vertex abscissas must increase strictly")
    if len(vertices) == 1:
        return WedgeBoundary(vertices=vertices, face_angles=(0.0,), turn_angles=(0.0,))
    angles = [math.atan2(b1 - b0, a1 - a0) for (a0, b0), (a1, b1) in zip(vertices, vertices[1:], strict=False)]
    if abs(angles[0]) > 1e-14:
        raise ValueError("the first wall face must be horizontal")
    # the last face continues the last segment
    angles.append(angles[-1])
    turns = [0.0] + [angles[k] - angles[k - 1] for k in range(1, len(vertices))]
    return WedgeBoundary(vertices=vertices, face_angles=tuple(angles), turn_angles=tuple(turns))


def _row_state(row) -> State:
    return State(*(float(x) for x in row[1:]))


def _cell_average(rows, lo: float, hi: float) -> State:
    ys = np.array([r[0] for r in rows])
    values = np.array([r[1:] for r in rows])
    points = np.concatenate(([lo], ys[(ys > lo) & (ys < hi)], [hi]))
    total = np.zeros(4)
    for a, b in zip(points[:-1], points[1:], strict=True):
        fa = np.array([np.interp(a, ys, values[:, k]) for k in range(4)])
        fb = np.array([np.interp(b, ys, values[:, k]) for k in range(4)])
        total += 0.5 * (fa + fb) * (b - a)
    return State.from_array(total / (hi - lo))


def initial_cells(profile: InflowProfile, eps: float, top: float = 0.0) -> list[tuple[float, State]]:
    """(y_start, state) of every initial cell, ascending; the first cell extends to −∞."""
    rows = sorted(profile.rows, key=lambda r: r[0])
    if profile.mode == "steps":
        cells = [(-math.inf, _row_state(rows[0]))]
        cells.extend((float(r[0]), _row_state(r)) for r in rows[1:] if r[0] < top)
    elif profile.mode == "linear":
        y0 = float(rows[0][0])
        gradient = 0.0
        for r0, r1 in zip(rows, rows[1:], strict=False):
            jump = float(np.linalg.norm(np.subtract(r1[1:], r0[1:])))
            gradient = max(gradient, jump / (r1[0] - r0[0]))
        cells = [(-math.inf, _row_state(rows[0]))]
        if gradient > 0.0 and y0 < top:
            n = max(1, math.ceil((top - y0) * gradient / eps))
            h = (top - y0) / n
            cells.extend((y0 + j * h, _cell_average(rows, y0 + j * h, y0 + (j + 1) * h)) for j in range(n))
    else:
        raise ValueError(f"unknown inflow mode {profile.mode!r}")
    merged = [cells[0]]
    for y, state in cells[1:]:
        if state != merged[-1][1]:
            merged.append((y, state))
    return merged


def lambda_hat_for(states, g, factor: float = LAMBDA_HAT_FACTOR, radius: float = 0.0) -> float:
    """Bound on every characteristic slope: ``factor`` times the largest |λ| near ``states``.

    With ``radius`` > 0 every coordinate of every state is also moved by ±radius, so
    that states created later within that distance stay below the bound.
    """
    offsets = [np.zeros(4)]
    if radius > 0.0:
        offsets += [sign * radius * np.eye(4)[k] for k in range(4) for sign in (1.0, -1.0)]
    largest = 0.0
    for s in states:
        for offset in offsets:
            try:
                shifted = State.from_array(s.as_array() + offset)
            except RegimeError:
                continue
            if not gasdyn.is_x_supersonic(shifted, g):
                continue
            lam = gasdyn.eigenvalues(shifted, g)
            largest = max(largest, abs(lam[0]), abs(lam[3]))
    return factor * max(largest, 1e-3)


def _jitter(seed: int, front_id: int) -> float:
    rng = np.random.default_rng((seed, front_id))
    return JITTER * (2.0 * rng.random() - 1.0)


def _merge_tiny(wave_list) -> list[WaveDescriptor]:
    """Drop near-zero physical waves, handing their jump to the next (or previous) wave."""
    kept = []
    carry = None
    for w in wave_list:
        if carry is not None:
            w = msgspec.structs.replace(w, left_state=carry)
            carry = None
        if not (w.strong or w.nonphysical) and abs(w.strength) < TINY_STRENGTH:
            carry = w.left_state
            logger.debug("dropping family-%s front of strength %.3e", w.family.label, w.strength)
            continue
        kept.append(w)
    if carry is not None:
        if kept:
            kept[-1] = msgspec.structs.replace(kept[-1], right_state=wave_list[-1].right_state)
        elif carry != wave_list[-1].right_state:
            kept.append(msgspec.structs.replace(wave_list[-1], left_state=carry))
    return kept


def _fronts_from(wave_list, x: float, y: float, next_id: int, seed: int, lambda_hat: float,
                 generation: int) -> tuple[list[Front], int]:
    """Fronts anchored at (x, y) with strictly increasing slopes."""
    fronts = []
    previous = -math.inf
    for w in wave_list:
        if w.nonphysical:
            slope = lambda_hat
        elif w.strong:
            slope = w.speed
        else:
            slope = w.speed + _jitter(seed, next_id)
        if slope <= previous:
            slope = math.nextafter(previous, math.inf)
        if w.nonphysical and slope != lambda_hat:
            raise StructuralFailure(f"wave slope {previous:.6g} reached the nonphysical slope {lambda_hat:.6g}")
        if not w.nonphysical and abs(slope) >= lambda_hat:
            raise StructuralFailure(f"family-{w.family.label} front slope {slope:.6g} reached lambda_hat "
                                    f"{lambda_hat:.6g}", context={"x": x, "y": y, "slope": slope})
        fronts.append(Front(id=next_id, descriptor=w, x0=x, y0=y, slope=slope, generation=generation))
        previous = slope
        next_id += 1
    return fronts, next_id


def assemble_frontset(x: float, fronts, states, face_index: int, next_id: int, absorbed: float = 0.0) -> FrontSet:
    """FrontSet with the strong-front index located and the state chain checked."""
    fronts = tuple(fronts)
    states = tuple(states)
    if len(states) != len(fronts) + 1:
        raise ValueError(f"{len(fronts)} fronts need {len(fronts) + 1} states, got {len(states)}")
    strong_index = None
    for i, f in enumerate(fronts):
        if f.descriptor.left_state != states[i] or f.descriptor.right_state != states[i + 1]:
            raise ValueError(f"state chain broken at front {f.id}")
        if f.strong:
            if strong_index is not None:
                raise ValueError("more than one strong front")
            strong_index = i
    return FrontSet(x=x, fronts=fronts, states=states, face_index=face_index, strong_index=strong_index,
                    next_id=next_id, absorbed=absorbed)


def discretize_initial(cfg: RunConfig, boundary: WedgeBoundary | None = None) -> tuple[FrontSet, WaveFan]:
    """Front set at x = 0 and the vertex fan that created the strong shock."""
    g = cfg.gas
    boundary = boundary or build_boundary(cfg.vertices)
    eps = cfg.tracking.eps
    delta = cfg.tracking.delta
    seed = cfg.tracking.seed
    cells = initial_cells(cfg.inflow, eps)

    fronts: list[Front] = []
    states = [cells[0][1]]
    next_id = 0
    for y, state in cells[1:]:
        fan = riemann.solve_accurate(states[-1], state, g, delta)
        created, next_id = _fronts_from(_merge_tiny(fan.waves), 0.0, y, next_id, seed, math.inf, 0)
        fronts.extend(created)
        states.extend(f.descriptor.right_state for f in created)
    logger.debug("inflow discretized into %d jumps carrying %d fronts", len(cells) - 1, len(fronts))

    top = states[-1]
    problem = BoundaryRiemannInput(state=top, omega=boundary.face_angles[0] - top.flow_angle,
                                   normal_next=boundary.normal(0))
    vertex_fan = riemann.solve_boundary_vertex(problem, g, delta)
    vertex_waves = [msgspec.structs.replace(w, strong=w.is_shock) for w in vertex_fan.waves]
    vertex_fan = msgspec.structs.replace(vertex_fan, waves=tuple(vertex_waves),
                                         contains_strong=any(w.strong for w in vertex_waves))
    created, next_id = _fronts_from(vertex_waves, 0.0, 0.0, next_id, seed, math.inf, 0)
    fronts.extend(created)
    states.extend(f.descriptor.right_state for f in created)
    return assemble_frontset(0.0, fronts, states, 0, next_id), vertex_fan


def background_of(fs: FrontSet) -> Background | None:
    strong = fs.strong_front
    if strong is None:
        return None
    d = strong.descriptor
    return Background(u_minus=d.left_state, u_plus=d.right_state, sigma0=d.speed)


# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------

def next_event(fs: FrontSet, boundary: WedgeBoundary, x_max: float) -> Event | None:
    """Earliest pending event, ordered by (x, y); None once it lies at or beyond ``x_max``."""
    x = fs.x
    queue = []
    ys = fs.positions()
    fronts = fs.fronts
    for i in range(len(fronts) - 1):
        lower, upper = fronts[i], fronts[i + 1]
        closing = lower.slope - upper.slope
        if closing <= 0.0:
            continue
        # adjacent contacts share the flow direction; only the jitter separates them
        if lower.family.linearly_degenerate and upper.family.linearly_degenerate:
            continue
        x_hit = x + max(ys[i + 1] - ys[i], 0.0) / closing
        y_hit = 0.5 * (lower.y_at(x_hit) + upper.y_at(x_hit))
        kind = "weak-strong" if (lower.strong or upper.strong) else "weak-weak"
        heapq.heappush(queue, (x_hit, y_hit, i, Event(x=x_hit, kind=kind, participants=(lower.id, upper.id),
                                                      y=y_hit, index=i)))

    k = fs.face_index
    next_vertex = boundary.abscissas[k + 1] if k + 1 < len(boundary.vertices) else math.inf
    if fronts:
        top = fronts[-1]
        closing = top.slope - boundary.face_slope(k)
        if closing > 0.0:
            x_hit = x + max(boundary.face_y(k, x) - ys[-1], 0.0) / closing
            if x_hit < next_vertex:
                heapq.heappush(queue, (x_hit, boundary.face_y(k, x_hit), len(fronts),
                                       Event(x=x_hit, kind="front-boundary", participants=(top.id,),
                                             y=boundary.face_y(k, x_hit), index=len(fronts) - 1)))
    if next_vertex < math.inf:
        a, b = boundary.vertices[k + 1]
        heapq.heappush(queue, (a, b, len(fronts) + 1,
                               Event(x=a, kind="boundary-vertex", participants=(), y=b, vertex=k + 1)))
    if not queue:
        return None
    event = heapq.heappop(queue)[3]
    if event.x < x:
        event = msgspec.structs.replace(event, x=x)
    if event.x >= x_max:
        return None
    return event


def _replace_fronts(fs: FrontSet, lo: int, hi: int, wave_list, x: float, y: float, lambda_hat: float,
                    seed: int, generation: int, face_index: int | None = None,
                    open_top: bool = False, absorbed: float = 0.0) -> tuple[FrontSet, list[Front]]:
    """Replace fronts[lo:hi] by fronts built from ``wave_list`` anchored at (x, y).

    ``open_top`` lets the fan end on a new wall state instead of states[hi];
    ``absorbed`` is nonphysical strength leaving through the wall at this event.
    """
    wave_list = _merge_tiny(wave_list)
    created, next_id = _fronts_from(wave_list, x, y, fs.next_id, seed, lambda_hat, generation)
    below = fs.states[lo]
    above = None if open_top else fs.states[hi]
    chain = [below] + [f.descriptor.right_state for f in created]
    if above is not None and chain[-1] != above:
        raise ValueError("outgoing fan does not end on the state above the interaction")
    fronts = list(fs.fronts[:lo]) + created + list(fs.fronts[hi:])
    states = list(fs.states[:lo]) + chain + list(fs.states[hi + 1:])
    face = fs.face_index if face_index is None else face_index
    return assemble_frontset(x, fronts, states, face, next_id, fs.absorbed + absorbed), created


def _normal_at(angle: float) -> tuple[float, float]:
    return (-math.sin(angle), math.cos(angle))


def _check_tangency(fs: FrontSet, boundary: WedgeBoundary) -> None:
    """Warn when the wall state leaves the wall by more than the nonphysical strength absorbed there."""
    wall = fs.wall_state
    nx, ny = boundary.normal(fs.face_index)
    normal_speed = abs(wall.u * nx + wall.v * ny)
    if normal_speed > TANGENCY_TOLERANCE * max(1.0, wall.speed) + 2.0 * fs.absorbed:
        logger.warning("wall state not tangent at x=%.6g: |(u,v).n|=%.3e", fs.x, normal_speed)


def step(fs: FrontSet, ev: Event, cfg: RunConfig, boundary: WedgeBoundary, lambda_hat: float,
         sigma0: float | None = None) -> StepOutcome:
    """Resolve one event and return the front set just after it.

    The wall keeps the flow direction of its adjacent state: reflections restore it
    and a vertex turns it by the vertex angle. A nonphysical front reaching the wall
    leaves the domain and its jump stays as a tangency defect of at most its strength.
    """
    g = cfg.gas
    params = cfg.tracking
    mu = params.mu
    delta = params.delta
    x = ev.x
    omega = 0.0
    absorbed = 0.0

    if ev.kind == "boundary-vertex":
        k = ev.vertex
        omega = boundary.turn_angles[k]
        wall = fs.wall_state
        problem = BoundaryRiemannInput(state=wall, omega=omega, normal_next=_normal_at(wall.flow_angle + omega))
        fan = riemann.solve_boundary_vertex(problem, g, delta)
        n = len(fs.fronts)
        new_fs, created = _replace_fronts(fs, n, n, fan.waves, x, boundary.vertices[k][1], lambda_hat,
                                          params.seed, 1, face_index=k, open_top=True)
        incoming, regions = (), ()
    elif ev.kind == "front-boundary":
        top = fs.fronts[-1]
        if top.strong:
            raise StructuralFailure("the strong shock reached the wall", context={"x": x})
        if top.nonphysical:
            fan = riemann.solve_boundary_exit(top.descriptor)
            absorbed = top.strength
        else:
            fan = riemann.solve_boundary_reflection(top.descriptor.left_state, fs.wall_state,
                                                    _normal_at(fs.wall_state.flow_angle), g, delta)
        n = len(fs.fronts)
        new_fs, created = _replace_fronts(fs, n - 1, n, fan.waves, x, boundary.face_y(fs.face_index, x),
                                          lambda_hat, params.seed, top.generation + 1, open_top=True,
                                          absorbed=absorbed)
        incoming, regions = (top.descriptor,), (fs.region(n - 1),)
    else:
        i = ev.index
        lower, upper = fs.fronts[i], fs.fronts[i + 1]
        generation = max(lower.generation, upper.generation) + 1
        incoming = (lower.descriptor, upper.descriptor)
        regions = (fs.region(i), fs.region(i + 1))
        below, above = lower.descriptor.left_state, upper.descriptor.right_state
        if ev.kind == "weak-strong":
            strong, weak = (upper, lower) if upper.strong else (lower, upper)
            side = "below" if weak is lower else "above"
            if not weak.nonphysical and abs(weak.strength) > mu:
                fan = riemann.solve_strong(below, above, g, delta, sigma_guess=strong.descriptor.speed,
                                           bracket=params.strong_bracket, center=sigma0)
            else:
                shock = StrongShock(sigma=strong.descriptor.speed, below_state=strong.descriptor.left_state,
                                    above_state=strong.descriptor.right_state)
                fan = riemann.solve_simplified_strong(weak.descriptor, shock, side, lambda_hat, g)
        else:
            physical = not (lower.nonphysical or upper.nonphysical)
            # waves of one family merge instead of passing through each other
            if physical and (abs(lower.strength * upper.strength) > mu or lower.family == upper.family):
                fan = riemann.solve_accurate(below, above, g, delta)
            else:
                fan = riemann.solve_simplified_weak(lower.descriptor, upper.descriptor, lambda_hat, g)
        new_fs, created = _replace_fronts(fs, i, i + 2, fan.waves, x, ev.y, lambda_hat, params.seed, generation)

    _check_tangency(new_fs, boundary)
    logger.debug("x=%.9g %s %s -> %d fronts (%s)", x, ev.kind, ev.participants, len(created), fan.solver)
    return StepOutcome(frontset=new_fs, event=ev, incoming=incoming, incoming_regions=regions,
                       outgoing=tuple(created), solver=fan.solver, omega=omega,
                       nonphysical_out=fan.nonphysical_strength)


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

def _label(w: WaveDescriptor) -> str:
    return "S" if w.strong else w.family.label


def _record(index: int, outcome: StepOutcome, measure: float, verdict: EventVerdict) -> EventRecord:
    ev = outcome.event
    return EventRecord(
        index=index, x=ev.x, y=ev.y, kind=ev.kind, participants=ev.participants,
        families_in=tuple(_label(w) for w in outcome.incoming),
        strengths_in=tuple(w.strength for w in outcome.incoming),
        families_out=tuple(_label(f.descriptor) for f in outcome.outgoing),
        strengths_out=tuple(f.strength for f in outcome.outgoing),
        created=tuple(f.id for f in outcome.outgoing),
        solver=outcome.solver, measure=measure, nonphysical_out=outcome.nonphysical_out,
        delta_F=verdict.delta_F, delta_Q=verdict.delta_Q,
        verdict="pass" if verdict.passed else "fail", detail=verdict.detail,
    )


def run(cfg: RunConfig) -> History:
    """Track fronts from x = 0 to ``cfg.tracking.x_max``.

    Raises StructuralFailure carrying the history up to the last valid snapshot.
    """
    g = cfg.gas
    params = cfg.tracking
    consts = cfg.functionals
    boundary = build_boundary(cfg.vertices)
    fs, vertex_fan = discretize_initial(cfg, boundary)
    lambda_hat = params.lambda_hat or lambda_hat_for(fs.states, g, radius=params.tv_bound)
    background = background_of(fs)
    history = History(config=cfg, boundary=boundary, lambda_hat=lambda_hat, background=background)
    logger.info("run eps=%g x_max=%g: %d initial fronts, lambda_hat=%.6g", params.eps, params.x_max,
                len(fs.fronts), lambda_hat)

    created = len(vertex_fan.waves)
    vertex_outcome = StepOutcome(
        frontset=fs, event=Event(x=0.0, kind="boundary-vertex", participants=(), y=0.0, vertex=0),
        incoming=(), incoming_regions=(), outgoing=fs.fronts[len(fs.fronts) - created:],
        solver=vertex_fan.solver, omega=boundary.face_angles[0] - vertex_fan.below.flow_angle,
    )
    report = functionals.glimm(fs, boundary, consts, background)
    verdict = EventVerdict(passed=True, delta_F=0.0, delta_Q=0.0, measure=abs(vertex_outcome.omega), bound=0.0)
    history.events.append(_record(0, vertex_outcome, abs(vertex_outcome.omega), verdict))
    history.snapshots.append(fs)
    history.reports.append(report)
    history.verdicts.append(verdict)

    sigma0 = background.sigma0 if background else None
    while True:
        ev = next_event(fs, boundary, params.x_max)
        if ev is None:
            break
        if len(history.events) > params.max_events:
            history.failure = f"event budget of {params.max_events} exhausted at x={fs.x:.9g}"
            raise StructuralFailure(history.failure, context={"x": fs.x}, history=history)
        try:
            outcome = step(fs, ev, cfg, boundary, lambda_hat, sigma0)
        except (StructuralFailure, RiemannSolveError, RegimeError, ShockSolveError, ValueError) as exc:
            context = {"x": ev.x, "y": ev.y, "kind": ev.kind, "participants": list(ev.participants)}
            history.failure = f"{ev.kind} event at x={ev.x:.9g}: {exc}"
            logger.error("structural failure: %s", history.failure)
            raise StructuralFailure(history.failure, context=context, history=history) from exc
        fs = outcome.frontset
        report = functionals.glimm(fs, boundary, consts, background)
        measure = functionals.event_measure(outcome, consts)
        verdict = functionals.monitor_event(history.reports[-1], report, ev, measure, consts.c_monitor)
        if not verdict.passed:
            logger.warning("monitor: %s event at x=%.9g has dQ=%.3e (bound %.3e), dF=%.3e", ev.kind, ev.x,
                           verdict.delta_Q, verdict.bound, verdict.delta_F)
        history.events.append(_record(len(history.events), outcome, measure, verdict))
        history.snapshots.append(fs)
        history.reports.append(report)
        history.verdicts.append(verdict)

    logger.info("run finished: %d events, %d fronts at x=%g, nonphysical total %.3e", len(history.events),
                len(fs.fronts), params.x_max, functionals.nonphysical_total(fs))
    return history


def calibrate(cfg: RunConfig) -> tuple[CoefficientTable, FunctionalConstants]:
    """Interaction coefficients at the run's background and constants sized for its initial data."""
    boundary = build_boundary(cfg.vertices)
    fs, _ = discretize_initial(cfg, boundary)
    background = background_of(fs)
    if background is None:
        raise ConfigError({"inflow": ["calibration needs a strong shock: the inflow angle at the wall is zero"]})
    variation = sum(abs(f.strength) for f in fs.fronts if not f.strong)
    table = functionals.probe_coefficients(background, cfg.gas)
    consts = functionals.derive_constants(table, cfg.functionals, variation, boundary.total_turning)
    logger.info("calibrated for initial variation %.3e and wall turning %.3e", variation, boundary.total_turning)
    return table, consts


def y_bottom(history: History) -> float:
    """Lower edge of the computational support at x = 0."""
    params = history.config.tracking
    if params.y_bottom is not None:
        return params.y_bottom
    return min(r[0] for r in history.config.inflow.rows) - 1.0


def sample(history: History, x: float, y_grid) -> list[State | None]:
    """U(x, y) for every y of the grid; None above the wall."""
    fs = history.frontset_at(x)
    wall = history.boundary.g(x)
    return [None if y > wall else fs.states[fs.locate(y, x)] for y in y_grid]


def front_segments(history: History) -> list[tuple[Front, float, float]]:
    """Every front with the x-interval it was alive on."""
    alive: dict[int, tuple[Front, float]] = {}
    segments = []
    for fs in history.snapshots:
        ids = {f.id for f in fs.fronts}
        for fid in [fid for fid in alive if fid not in ids]:
            front, start = alive.pop(fid)
            segments.append((front, start, fs.x))
        for f in fs.fronts:
            if f.id not in alive:
                alive[f.id] = (f, f.x0)
    end = history.config.tracking.x_max
    segments.extend((front, start, end) for front, start in alive.values())
    segments.sort(key=lambda item: item[0].id)
    return segments
