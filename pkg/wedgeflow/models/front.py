import bisect
import math

import msgspec

from wedgeflow.models.gas import GasModel, State
from wedgeflow.models.report import EventVerdict, FunctionalConstants, GlimmReport
from wedgeflow.models.wave import WaveDescriptor

EVENT_KINDS = ("weak-weak", "weak-strong", "front-boundary", "boundary-vertex")


class WedgeBoundary(msgspec.Struct, frozen=True):
    """Polygonal wall y = g(x) through the vertices (a_k, b_k).

    Face k starts at vertex k; the last face continues the last segment's angle.
    ``turn_angles[k]`` is the turn at vertex k (``turn_angles[0]`` is zero because the
    first face is horizontal).
    """

    vertices: tuple[tuple[float, float], ...]
    face_angles: tuple[float, ...]
    turn_angles: tuple[float, ...]

    @property
    def abscissas(self) -> tuple[float, ...]:
        return tuple(a for a, _ in self.vertices)

    @property
    def total_turning(self) -> float:
        return sum(abs(w) for w in self.turn_angles)

    def face_index(self, x: float) -> int:
        return max(0, bisect.bisect_right(self.abscissas, x) - 1)

    def face_slope(self, k: int) -> float:
        return math.tan(self.face_angles[k])

    def normal(self, k: int) -> tuple[float, float]:
        angle = self.face_angles[k]
        return (-math.sin(angle), math.cos(angle))

    def face_y(self, k: int, x: float) -> float:
        a, b = self.vertices[k]
        return b + (x - a) * math.tan(self.face_angles[k])

    def g(self, x: float) -> float:
        return self.face_y(self.face_index(x), x)

    def remaining_turning(self, x: float) -> float:
        """Σ|ω_k| over vertices strictly downstream of ``x``."""
        return sum(abs(w) for (a, _), w in zip(self.vertices, self.turn_angles, strict=True) if a > x)


class Front(msgspec.Struct, frozen=True):
    """A discontinuity moving along y = y0 + slope·(x − x0)."""

    id: int
    descriptor: WaveDescriptor
    x0: float
    y0: float
    slope: float
    generation: int = 0

    @property
    def strong(self) -> bool:
        return self.descriptor.strong

    @property
    def nonphysical(self) -> bool:
        return self.descriptor.nonphysical

    @property
    def family(self):
        return self.descriptor.family

    @property
    def strength(self) -> float:
        return self.descriptor.strength

    def y_at(self, x: float) -> float:
        return self.y0 + self.slope * (x - self.x0)


class FrontSet(msgspec.Struct, frozen=True):
    """Piecewise-constant solution at station ``x``.

    ``states[i]`` lies below ``fronts[i]`` and ``states[i + 1]`` above it; the last
    state is the wall-adjacent state.
    ``absorbed`` is the nonphysical strength that has left through the wall so far.
    """

    x: float
    fronts: tuple[Front, ...]
    states: tuple[State, ...]
    face_index: int = 0
    strong_index: int | None = None
    next_id: int = 0
    absorbed: float = 0.0

    @property
    def wall_state(self) -> State:
        return self.states[-1]

    @property
    def strong_front(self) -> Front | None:
        return None if self.strong_index is None else self.fronts[self.strong_index]

    def positions(self, x: float | None = None) -> list[float]:
        x = self.x if x is None else x
        return [f.y_at(x) for f in self.fronts]

    def region(self, index: int) -> str:
        """'minus' for fronts ahead of (below) the strong shock, 'plus' otherwise."""
        if self.strong_index is None or index > self.strong_index:
            return "plus"
        if index < self.strong_index:
            return "minus"
        return "strong"

    def state_region(self, index: int) -> str:
        """Region of ``states[index]``."""
        if self.strong_index is None or index > self.strong_index:
            return "plus"
        return "minus"

    def locate(self, y: float, x: float | None = None) -> int:
        """Index into ``states`` of the cell containing ``y``."""
        return bisect.bisect_right(self.positions(x), y)

    def at(self, x: float) -> "FrontSet":
        return msgspec.structs.replace(self, x=x)


class Event(msgspec.Struct, frozen=True):
    x: float
    kind: str
    participants: tuple[int, ...]
    y: float = 0.0
    index: int = -1
    vertex: int | None = None


class EventRecord(msgspec.Struct, frozen=True):
    """One line of events.jsonl."""

    index: int
    x: float
    y: float
    kind: str
    participants: tuple[int, ...]
    families_in: tuple[str, ...]
    strengths_in: tuple[float, ...]
    families_out: tuple[str, ...]
    strengths_out: tuple[float, ...]
    created: tuple[int, ...]
    solver: str
    measure: float
    nonphysical_out: float = 0.0
    delta_F: float = 0.0
    delta_Q: float = 0.0
    verdict: str = "pass"
    detail: str = ""


class InflowProfile(msgspec.Struct, frozen=True):
    """Inflow table rows (y, u, v, p, rho), ascending in y.

    ``steps``: row k holds on [y_k, y_{k+1}); the first row extends to −∞ and the
    last row up to the wall. ``linear``: rows sample a continuous profile that is
    interpolated linearly and held constant outside the table.
    """

    rows: tuple[tuple[float, float, float, float, float], ...]
    mode: str = "steps"


class TrackingParams(msgspec.Struct, frozen=True):
    eps: float = 1e-2
    x_max: float = 1.0
    mu_eps: float | None = None
    delta_eps: float | None = None
    lambda_hat: float | None = None
    seed: int = 0
    max_events: int = 200000
    tv_bound: float = 0.2
    strong_bracket: float = 0.1
    y_bottom: float | None = None

    @property
    def mu(self) -> float:
        return self.mu_eps if self.mu_eps is not None else self.eps ** 2

    @property
    def delta(self) -> float:
        return self.delta_eps if self.delta_eps is not None else self.eps


class SamplingGrid(msgspec.Struct, frozen=True):
    x: tuple[float, ...] = ()
    y_min: float = -1.0
    y_max: float = 0.0
    ny: int = 0

    def ys(self) -> list[float]:
        if self.ny <= 0:
            return []
        if self.ny == 1:
            return [self.y_min]
        step = (self.y_max - self.y_min) / (self.ny - 1)
        return [self.y_min + k * step for k in range(self.ny)]


class RunConfig(msgspec.Struct, frozen=True):
    gas: GasModel
    inflow: InflowProfile
    vertices: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    tracking: TrackingParams = msgspec.field(default_factory=TrackingParams)
    functionals: FunctionalConstants = msgspec.field(default_factory=FunctionalConstants)
    sampling: SamplingGrid = msgspec.field(default_factory=SamplingGrid)

    def with_eps(self, eps: float) -> "RunConfig":
        return msgspec.structs.replace(self, tracking=msgspec.structs.replace(self.tracking, eps=eps))

    def with_seed(self, seed: int) -> "RunConfig":
        return msgspec.structs.replace(self, tracking=msgspec.structs.replace(self.tracking, seed=seed))


class Background(msgspec.Struct, frozen=True):
    """Unperturbed strong shock at the wedge vertex: U0− ahead, U0+ behind, slope σ0."""

    u_minus: State
    u_plus: State
    sigma0: float


class History(msgspec.Struct):
    """Everything a run produced, in event order.

    ``snapshots[k]`` is the front set right after event k; ``reports[k]`` its Glimm
    report and ``verdicts[k]`` the monitor verdict of event k.
    """

    config: RunConfig
    boundary: WedgeBoundary
    lambda_hat: float
    background: Background | None = None
    events: list[EventRecord] = msgspec.field(default_factory=list)
    snapshots: list[FrontSet] = msgspec.field(default_factory=list)
    reports: list[GlimmReport] = msgspec.field(default_factory=list)
    verdicts: list[EventVerdict] = msgspec.field(default_factory=list)
    failure: str | None = None

    @property
    def final(self) -> FrontSet:
        return self.snapshots[-1]

    def frontset_at(self, x: float) -> FrontSet:
        """Front set valid at station ``x`` (the last snapshot taken at or before ``x``)."""
        stations = [fs.x for fs in self.snapshots]
        k = max(0, bisect.bisect_right(stations, x) - 1)
        return self.snapshots[k].at(x)

    def report_at(self, x: float) -> GlimmReport:
        stations = [fs.x for fs in self.snapshots]
        k = max(0, bisect.bisect_right(stations, x) - 1)
        return self.reports[k]


class StepOutcome(msgspec.Struct, frozen=True):
    """Result of processing one event: the new front set and what went in and out."""

    frontset: FrontSet
    event: Event
    incoming: tuple[WaveDescriptor, ...]
    incoming_regions: tuple[str, ...]
    outgoing: tuple[Front, ...]
    solver: str
    omega: float = 0.0
    nonphysical_out: float = 0.0
