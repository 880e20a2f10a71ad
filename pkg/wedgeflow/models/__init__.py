from wedgeflow.models.front import (
    EVENT_KINDS,
    Background,
    Event,
    EventRecord,
    Front,
    FrontSet,
    History,
    InflowProfile,
    RunConfig,
    SamplingGrid,
    StepOutcome,
    TrackingParams,
    WedgeBoundary,
)
from wedgeflow.models.gas import FluxPair, GasModel, State
from wedgeflow.models.report import (
    BoundaryEstimate,
    CoefficientTable,
    ConvergenceRow,
    ConvergenceTable,
    EventVerdict,
    FunctionalConstants,
    GlimmReport,
    LyapunovCell,
    LyapunovReport,
    ObliqueBranch,
    ObliqueShockSolution,
    OracleCheck,
    PotentialBreakdown,
    ResidualReport,
)
from wedgeflow.models.wave import (
    Admissibility,
    BoundaryRiemannInput,
    StrongShock,
    WaveDescriptor,
    WaveFamily,
    WaveFan,
)
