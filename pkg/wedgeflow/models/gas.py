import math

import msgspec
import numpy as np

from wedgeflow.errors import RegimeError


class GasModel(msgspec.Struct, frozen=True):
    """Polytropic ideal gas.

    ``kappa`` and ``c_v`` only normalize the entropy scalar; nondimensional runs keep
    both at 1.
    """

    gamma: float = 1.4
    kappa: float = 1.0
    c_v: float = 1.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if self.kappa <= 0 or self.c_v <= 0:
            raise ValueError("kappa and c_v must be positive")

    @property
    def gas_constant(self) -> float:
        return self.c_v * (self.gamma - 1.0)

    @property
    def max_compression(self) -> float:
        """Limiting density ratio (γ+1)/(γ−1) of an infinitely strong shock."""
        return (self.gamma + 1.0) / (self.gamma - 1.0)


class State(msgspec.Struct, frozen=True):
    """Primitive gas state U = (u, v, p, rho)."""

    u: float
    v: float
    p: float
    rho: float

    def __post_init__(self):
        if not (self.p > 0.0 and self.rho > 0.0):
            raise RegimeError(f"non-positive pressure or density: p={self.p}, rho={self.rho}")
        if not all(math.isfinite(x) for x in (self.u, self.v, self.p, self.rho)):
            raise RegimeError("state has non-finite components")

    @classmethod
    def from_array(cls, values) -> "State":
        u, v, p, rho = (float(x) for x in values)
        return cls(u, v, p, rho)

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.p, self.rho], dtype=float)

    @property
    def speed(self) -> float:
        return math.hypot(self.u, self.v)

    @property
    def flow_angle(self) -> float:
        return math.atan2(self.v, self.u)

    def distance(self, other: "State") -> float:
        return float(np.linalg.norm(self.as_array() - other.as_array()))


class FluxPair(msgspec.Struct, frozen=True):
    """x-flux ``w`` and y-flux ``h`` of the steady conservation law W(U)_x + H(U)_y = 0."""

    w: tuple[float, float, float, float]
    h: tuple[float, float, float, float]
