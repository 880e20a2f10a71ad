"""Thermodynamics, fluxes and the eigensystem of steady 2D Euler flow.

States are primitive (u, v, p, rho). The conservation law reads
W(U)_x + H(U)_y = 0 with

    W = (ρu, ρu² + p, ρuv, ρu(h + q²/2))
    H = (ρv, ρuv, ρv² + p, ρv(h + q²/2)),   h = γp / ((γ − 1)ρ).

Derivatives are taken by complex-step differentiation, which is exact to rounding
for these analytic expressions.
"""

import logging
import math

import numpy as np

from wedgeflow.errors import RegimeError
from wedgeflow.models import FluxPair, GasModel, State

logger = logging.getLogger(__name__)

SUPERSONIC_TOLERANCE = 1e-10
_COMPLEX_STEP = 1e-30


def sound_speed(s: State, g: GasModel) -> float:
    return math.sqrt(g.gamma * s.p / s.rho)


def mach_number(s: State, g: GasModel) -> float:
    return s.speed / sound_speed(s, g)


def mach_angle(s: State, g: GasModel) -> float:
    m = mach_number(s, g)
    if m < 1.0:
        raise RegimeError(f"subsonic state (M={m:.6g}) has no Mach angle")
    return math.asin(1.0 / m)


def enthalpy(s: State, g: GasModel) -> float:
    return g.gamma * s.p / ((g.gamma - 1.0) * s.rho)


def is_supersonic(s: State, g: GasModel) -> bool:
    return s.u ** 2 + s.v ** 2 > g.gamma * s.p / s.rho


def is_x_supersonic(s: State, g: GasModel) -> bool:
    c = sound_speed(s, g)
    return s.u - c > SUPERSONIC_TOLERANCE * c


def require_x_supersonic(s: State, g: GasModel) -> float:
    """Return the sound speed, raising RegimeError unless u > c."""
    c = sound_speed(s, g)
    if not s.u - c > SUPERSONIC_TOLERANCE * c:
        raise RegimeError(f"state is not x-supersonic: u={s.u:.17g}, c={c:.17g}")
    return c


def _flux_vectors(U, gamma):
    u, v, p, rho = U
    h = gamma * p / ((gamma - 1.0) * rho)
    energy = h + 0.5 * (u * u + v * v)
    w = np.array([rho * u, rho * u * u + p, rho * u * v, rho * u * energy])
    hy = np.array([rho * v, rho * u * v, rho * v * v + p, rho * v * energy])
    return w, hy


def flux_arrays(s: State, g: GasModel) -> tuple[np.ndarray, np.ndarray]:
    """(W, H) as float arrays."""
    return _flux_vectors(s.as_array(), g.gamma)


def fluxes(s: State, g: GasModel) -> FluxPair:
    w, h = flux_arrays(s, g)
    return FluxPair(w=tuple(float(x) for x in w), h=tuple(float(x) for x in h))


def flux_jacobians(s: State, g: GasModel) -> tuple[np.ndarray, np.ndarray]:
    """∇_U W and ∇_U H (4x4, columns indexed by u, v, p, rho)."""
    base = s.as_array().astype(complex)
    dW = np.empty((4, 4))
    dH = np.empty((4, 4))
    for k in range(4):
        probe = base.copy()
        probe[k] += 1j * _COMPLEX_STEP
        w, h = _flux_vectors(probe, g.gamma)
        dW[:, k] = w.imag / _COMPLEX_STEP
        dH[:, k] = h.imag / _COMPLEX_STEP
    return dW, dH


def _characteristic(U, gamma, sign):
    u, v, p, rho = U
    c2 = gamma * p / rho
    return (u * v + sign * np.sqrt(c2) * np.sqrt(u * u + v * v - c2)) / (u * u - c2)


def eigenvalues(s: State, g: GasModel) -> tuple[float, float, float, float]:
    """(λ1, λ2, λ3, λ4) with λ_{1,4} = (uv ∓ c√(u²+v²−c²))/(u²−c²), λ_{2,3} = v/u."""
    c = require_x_supersonic(s, g)
    c2 = c * c
    root = c * math.sqrt(max(s.u ** 2 + s.v ** 2 - c2, 0.0))
    denom = s.u ** 2 - c2
    lam23 = s.v / s.u
    return ((s.u * s.v - root) / denom, lam23, lam23, (s.u * s.v + root) / denom)


def characteristic_speed(s: State, family: int, g: GasModel) -> float:
    return eigenvalues(s, g)[int(family) - 1]


def eigenvalue_gradient(s: State, family: int, g: GasModel) -> np.ndarray:
    """∇_U λ_j for a genuinely nonlinear family (1 or 4)."""
    require_x_supersonic(s, g)
    sign = -1.0 if int(family) == 1 else 1.0
    base = s.as_array().astype(complex)
    grad = np.empty(4)
    for k in range(4):
        probe = base.copy()
        probe[k] += 1j * _COMPLEX_STEP
        grad[k] = _characteristic(probe, g.gamma, sign).imag / _COMPLEX_STEP
    return grad


def eigenvectors(s: State, g: GasModel) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Right eigenvectors r_1..r_4; r_1 and r_4 are normalized by r_j·∇λ_j = 1."""
    c = require_x_supersonic(s, g)
    lam = eigenvalues(s, g)
    vectors = []
    for family in (1, 4):
        lj = lam[family - 1]
        k = s.rho * (lj * s.u - s.v)
        r = np.array([-lj, 1.0, k, k / (c * c)])
        r = r / float(r @ eigenvalue_gradient(s, family, g))
        vectors.append(r)
    r2 = np.array([s.u, s.v, 0.0, 0.0])
    r3 = np.array([0.0, 0.0, 0.0, s.rho])
    return vectors[0], r2, r3, vectors[1]


def entropy_scalar(s: State, g: GasModel) -> float:
    """S = c_v ln(p / (κ ρ^γ))."""
    return g.c_v * math.log(s.p / (g.kappa * s.rho ** g.gamma))


def entropy_flux(s: State, g: GasModel) -> tuple[float, float]:
    """(ρuS, ρvS), the fluxes of the steady Clausius inequality."""
    entropy = entropy_scalar(s, g)
    return s.rho * s.u * entropy, s.rho * s.v * entropy


def uniform_state(mach: float, angle: float, g: GasModel, p: float = 1.0, rho: float = 1.4) -> State:
    """State of Mach ``mach`` flowing at ``angle`` (radians) above the x-axis."""
    c = math.sqrt(g.gamma * p / rho)
    return State(mach * c * math.cos(angle), mach * c * math.sin(angle), p, rho)
