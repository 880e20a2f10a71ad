import enum

import msgspec

from wedgeflow.models.gas import State


class WaveFamily(enum.IntEnum):
    """Characteristic family of a front.

    Nonphysical fronts are ordered after family 4: they are the fastest fronts of a run.
    """

    ONE = 1
    TWO = 2
    THREE = 3
    FOUR = 4
    NONPHYSICAL = 5

    @property
    def genuinely_nonlinear(self) -> bool:
        return self in (WaveFamily.ONE, WaveFamily.FOUR)

    @property
    def linearly_degenerate(self) -> bool:
        return self in (WaveFamily.TWO, WaveFamily.THREE)

    @property
    def label(self) -> str:
        return "NP" if self is WaveFamily.NONPHYSICAL else str(int(self))


class WaveDescriptor(msgspec.Struct, frozen=True):
    """One elementary wave between ``left_state`` (below) and ``right_state`` (above).

    ``strength`` is the signed arc length along the wave curve: positive for
    rarefactions, negative for shocks. Nonphysical waves carry |ΔU| as strength.
    ``parameter`` is the internal curve coordinate (log density ratio for families
    1 and 4, arc length for contacts) used to re-apply the wave elsewhere.
    """

    family: WaveFamily
    strength: float
    left_state: State
    right_state: State
    speed: float
    parameter: float = 0.0
    strong: bool = False

    @property
    def nonphysical(self) -> bool:
        return self.family is WaveFamily.NONPHYSICAL

    @property
    def is_shock(self) -> bool:
        return self.strong or (self.family.genuinely_nonlinear and self.strength < 0.0)

    @property
    def is_rarefaction(self) -> bool:
        return self.family.genuinely_nonlinear and not self.strong and self.strength > 0.0


class StrongShock(msgspec.Struct, frozen=True):
    """The large 1-shock: ``below_state`` is ahead (Ω−), ``above_state`` behind (Ω+)."""

    sigma: float
    below_state: State
    above_state: State


class WaveFan(msgspec.Struct, frozen=True):
    """Solution of one Riemann problem, waves ordered bottom to top.

    ``middle_states`` are the states between the elementary waves of the solve
    before rarefaction discretization.
    """

    below: State
    above: State
    waves: tuple[WaveDescriptor, ...] = ()
    middle_states: tuple[State, ...] = ()
    contains_strong: bool = False
    nonphysical_strength: float = 0.0
    strengths: tuple[float, ...] = ()
    residual: float = 0.0
    solver: str = "accurate"

    @property
    def empty(self) -> bool:
        return not self.waves

    def chain(self) -> list[State]:
        """States from below to above, one more than the number of waves."""
        if not self.waves:
            return [self.below]
        return [self.waves[0].left_state] + [w.right_state for w in self.waves]


class BoundaryRiemannInput(msgspec.Struct, frozen=True):
    """Lateral Riemann problem at a wall vertex turning by ``omega``."""

    state: State
    omega: float
    normal_next: tuple[float, float]


class Admissibility(msgspec.Struct, frozen=True):
    ok: bool
    diagnostic: str

    def __bool__(self):
        return self.ok
