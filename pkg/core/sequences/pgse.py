"""
PGSE Sequences
==============
Pulsed-gradient spin echo profile, gradient vectors and b-values.

The first pulse starts at t = 0 and the echo time is TE = δ + Δ:

    f(t) = +1 on [0, δ],  0 on (δ, Δ],  -1 on (Δ, δ + Δ]
    F(t) = ∫_0^t f(s) ds
    b    = γ² |g|² ∫_0^TE F(t)² dt = γ² |g|² δ² (Δ - δ/3)
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from config import GAMMA, B_INTERNAL_TO_SI, SEQUENCES
from ..errors import ParameterError

logger = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Pgse:
    """PGSE timing: pulse duration δ and separation Δ (ms)"""
    delta: float
    Delta: float
    seq_id: str = "PGSE"

    def __post_init__(self):
        if not (0 < self.delta <= self.Delta):
            raise ParameterError(f"PGSE needs 0 < delta <= Delta, got delta={self.delta}, Delta={self.Delta}")

    @classmethod
    def from_preset(cls, name: str) -> "Pgse":
        if name not in SEQUENCES:
            raise ParameterError(f"Unknown sequence preset '{name}', choose from {sorted(SEQUENCES)}")
        p = SEQUENCES[name]
        return cls(delta=p["delta_ms"], Delta=p["Delta_ms"], seq_id=name)

    @property
    def echo_time(self) -> float:
        return self.delta + self.Delta

    @property
    def diffusion_time(self) -> float:
        """Δ - δ/3"""
        return self.Delta - self.delta / 3.0

    @property
    def f_squared_integral(self) -> float:
        """∫ F(t)² dt = δ² (Δ - δ/3), ms³"""
        return self.delta ** 2 * self.diffusion_time

    def intervals(self) -> List[Tuple[float, float, float]]:
        """Constant-profile pieces (t0, t1, f); the empty middle piece is dropped when δ = Δ"""
        pieces = [(0.0, self.delta, 1.0), (self.delta, self.Delta, 0.0), (self.Delta, self.echo_time, -1.0)]
        return [p for p in pieces if p[1] > p[0]]

    def profile(self, t):
        t = np.asarray(t, dtype=float)
        return np.select(
            [(t >= 0) & (t <= self.delta), (t > self.delta) & (t <= self.Delta), (t > self.Delta) & (t <= self.echo_time)],
            [1.0, 0.0, -1.0],
            default=0.0,
        )

    def integrated_profile(self, t):
        t = np.asarray(t, dtype=float)
        return np.select(
            [(t >= 0) & (t <= self.delta), (t > self.delta) & (t <= self.Delta), (t > self.Delta) & (t <= self.echo_time)],
            [t, self.delta, self.delta - (t - self.Delta)],
            default=0.0,
        )

    def label(self) -> str:
        return f"{self.seq_id}(delta={self.delta:g} ms, Delta={self.Delta:g} ms)"


@dataclass(frozen=True)
class Gradient:
    """Gradient amplitude (T/m) along a unit direction"""
    direction: Tuple[float, float, float]
    amplitude: float

    def __post_init__(self):
        u = np.asarray(self.direction, dtype=float)
        if u.shape != (3,):
            raise ParameterError(f"Direction must be a 3-vector, got {self.direction}")
        if abs(np.linalg.norm(u) - 1.0) > UNIT_TOLERANCE:
            raise ParameterError(f"Direction must be a unit vector, |u| = {np.linalg.norm(u):.17g}")
        if self.amplitude < 0:
            raise ParameterError(f"Gradient amplitude must be non-negative, got {self.amplitude}")
        object.__setattr__(self, "direction", tuple(float(c) for c in u))

    @classmethod
    def along(cls, direction: Sequence[float], amplitude: float) -> "Gradient":
        """Normalize an arbitrary non-zero direction first"""
        u = np.asarray(direction, dtype=float)
        norm = np.linalg.norm(u)
        if norm == 0:
            raise ParameterError("Gradient direction cannot be the zero vector")
        return cls(direction=tuple(u / norm), amplitude=amplitude)

    @property
    def u(self) -> np.ndarray:
        return np.array(self.direction)

    @property
    def vector(self) -> np.ndarray:
        return self.amplitude * self.u

    def reversed(self) -> "Gradient":
        return Gradient(direction=tuple(-self.u), amplitude=self.amplitude)


# === b-values ===

def bvalue(seq: Pgse, amplitude: float) -> float:
    """Closed-form b-value in s/mm²"""
    if amplitude < 0:
        raise ParameterError(f"Gradient amplitude must be non-negative, got {amplitude}")
    return GAMMA ** 2 * amplitude ** 2 * seq.f_squared_integral * B_INTERNAL_TO_SI


def bvalue_quadrature(seq: Pgse, amplitude: float) -> float:
    """b-value from adaptive quadrature of γ²|g|²∫F²; oracle for the closed form"""
    integral, _ = quad(
        lambda t: float(seq.integrated_profile(t)) ** 2,
        0.0, seq.echo_time,
        points=[seq.delta, seq.Delta],
        epsabs=0.0, epsrel=1e-13, limit=200,
    )
    return GAMMA ** 2 * amplitude ** 2 * integral * B_INTERNAL_TO_SI


def amplitude_for_b(seq: Pgse, b: float) -> float:
    """Inverse of bvalue: amplitude (T/m) giving b (s/mm²)"""
    if b < 0:
        raise ParameterError(f"b-value must be non-negative, got {b}")
    return math.sqrt(b / B_INTERNAL_TO_SI / (GAMMA ** 2 * seq.f_squared_integral))


def b_internal(b: float) -> float:
    """s/mm² -> ms/μm²"""
    return b / B_INTERNAL_TO_SI


def diffusion_time_series(deltas: Sequence[float]) -> List[Pgse]:
    """PGSE family with δ = Δ/2 for each pulse duration"""
    return [Pgse(delta=d, Delta=2.0 * d, seq_id=f"PGSE_d{d:g}") for d in deltas]
