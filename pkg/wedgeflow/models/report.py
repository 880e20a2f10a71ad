import msgspec

from wedgeflow.models.gas import State


class FunctionalConstants(msgspec.Struct, frozen=True):
    """Weights of the Glimm functional, the potential and the Lyapunov functional.

    Defaults are conservative; ``wedgeflow calibrate`` measures a feasible set for a
    given background and writes it as a ``functionals`` config section.
    """

    k_minus: float = 4.0
    c_star: float = 2.0
    k_star: float = 0.75
    k_b0_tilde: float = 4.0
    kappa: float = 4.0
    c_monitor: float = 1e-3
    kappa1: float = 1.0
    kappa2: float = 1.0
    k_contact: float = 0.5
    k_nonphysical: float = 0.25
    c_b: tuple[float, float, float, float] = (2.0, 2.0, 2.0, 2.0)
    c_m: tuple[float, float, float, float] = (1.0, 0.5, 0.5, 1.0)
    c_a: tuple[float, float, float, float] = (0.5, 1.0, 1.0, 0.75)


class PotentialBreakdown(msgspec.Struct, frozen=True):
    q_approach: float = 0.0
    q_strong: float = 0.0
    q_boundary: float = 0.0
    q_wedge: float = 0.0

    @property
    def total(self) -> float:
        return self.q_approach + self.q_strong + self.q_boundary + self.q_wedge


class GlimmReport(msgspec.Struct, frozen=True):
    x: float
    V: float
    Q: PotentialBreakdown
    F: float
    u_star: State | None = None
    u_sub: State | None = None
    nonphysical: float = 0.0


class EventVerdict(msgspec.Struct, frozen=True):
    passed: bool
    delta_F: float
    delta_Q: float
    measure: float
    bound: float
    detail: str = ""


class LyapunovCell(msgspec.Struct, frozen=True):
    y_lo: float
    y_hi: float
    region: str
    q: tuple[float, float, float, float]
    weights: tuple[float, float, float, float]
    flagged: bool = False


class BoundaryEstimate(msgspec.Struct, frozen=True):
    """Riemann connection between two wall-adjacent states."""

    p1: float
    p4: float
    lambda_gap: float
    ratio_p4: float
    ratio_lambda: float


class LyapunovReport(msgspec.Struct, frozen=True):
    x: float
    phi: float
    components: tuple[float, float, float, float]
    l1: float
    cells: tuple[LyapunovCell, ...] = ()
    partial: bool = False
    boundary: BoundaryEstimate | None = None

    @property
    def ratio(self) -> float:
        return self.phi / self.l1 if self.l1 > 0 else 0.0


class CoefficientTable(msgspec.Struct, frozen=True):
    """Finite-difference interaction coefficients at a background configuration."""

    k_b4: float
    k_b3: float
    k_b2: float
    k_b0: float
    k_bs: float
    k_s: tuple[float, float, float, float]
    k_weak: tuple[tuple[float, float, float, float], ...]
    shift_above: float
    shift_below: tuple[float, ...]
    weak_bound: float
    reflection_margin: float
    simplified_bound: float = 0.0
    shock_lipschitz: float = 0.0


class ObliqueBranch(msgspec.Struct, frozen=True):
    beta: float
    pressure_ratio: float
    density_ratio: float
    mach: float


class ObliqueShockSolution(msgspec.Struct, frozen=True):
    mach: float
    theta: float
    detached: bool
    weak: ObliqueBranch | None = None
    strong: ObliqueBranch | None = None

    @property
    def beta_weak(self) -> float | None:
        return self.weak.beta if self.weak else None

    @property
    def beta_strong(self) -> float | None:
        return self.strong.beta if self.strong else None


class ResidualReport(msgspec.Struct, frozen=True):
    rect: tuple[float, float, float, float]
    residual: tuple[float, float, float, float]
    relative: float
    entropy: float
    nonphysical_measure: float
    rarefaction_measure: float
    scale: float


class ConvergenceRow(msgspec.Struct, frozen=True):
    """Distance between the runs at positions ``coarse`` and ``fine`` of the ε list."""

    eps_coarse: float
    eps_fine: float
    l1: float
    coarse: int = 0
    fine: int = 1


class ConvergenceTable(msgspec.Struct, frozen=True):
    station: float
    rows: tuple[ConvergenceRow, ...]
    slope: float | None
    nonphysical: tuple[float, ...] = ()
    event_counts: tuple[int, ...] = ()


class OracleCheck(msgspec.Struct, frozen=True):
    """One self-test comparison against a closed-form relation."""

    check: str
    mach: float
    angle: float
    expected: float
    measured: float
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance
