"""
Apparent Diffusion Coefficients
===============================
Short-time approximation (STA) of the ADC from the surface-to-volume
ratio, and the two-point ADC from simulated signals.

    STA = D0 [1 - 4√D0 / (3√π) · C_{δ,Δ} · A_ug / |Ω|]
    C_{δ,Δ} = 4/35 [(Δ+δ)^{7/2} + (Δ-δ)^{7/2} - 2(δ^{7/2} + Δ^{7/2})] / (δ²(Δ - δ/3))
    A_ug = ∫_∂Ω (u_g · n)² dS
"""

import logging
import math

import numpy as np
from scipy.special import binom

from config import SQRT_PI
from ..errors import ParameterError
from ..mesh import Mesh, directional_area, volume
from ..sequences import Pgse, b_internal

logger = logging.getLogger(__name__)

SERIES_RATIO = 0.05      # δ/Δ below which C_{δ,Δ} is summed as a series
SERIES_TERMS = 40


def _even_binomial_sum(r: float) -> float:
    """(1+r)^{7/2} + (1-r)^{7/2} - 2 without cancellation"""
    k = np.arange(2, 2 * SERIES_TERMS + 1, 2)
    return float(2.0 * np.sum(binom(3.5, k) * r ** k))


def sta_coefficient(seq: Pgse) -> float:
    """C_{δ,Δ} in √ms; tends to √Δ as δ/Δ -> 0"""
    d, D = seq.delta, seq.Delta
    r = d / D
    if r < SERIES_RATIO:
        numerator = _even_binomial_sum(r) - 2.0 * r ** 3.5
        return 4.0 / 35.0 * math.sqrt(D) * numerator / (r * r * (1.0 - r / 3.0))
    numerator = (D + d) ** 3.5 + (D - d) ** 3.5 - 2.0 * (d ** 3.5 + D ** 3.5)
    return 4.0 / 35.0 * numerator / (d * d * (D - d / 3.0))


def _surface_ratio(mesh: Mesh, u_g) -> float:
    return directional_area(mesh, u_g) / volume(mesh)


def sta_adc(mesh: Mesh, D0: float, seq: Pgse, u_g) -> float:
    """Finite-pulse STA ADC (μm²/ms)"""
    if D0 <= 0:
        raise ParameterError(f"D0 must be positive, got {D0}")
    correction = 4.0 * math.sqrt(D0) / (3.0 * SQRT_PI) * sta_coefficient(seq) * _surface_ratio(mesh, u_g)
    return D0 * (1.0 - correction)


def sta_adc_short_pulse(mesh: Mesh, D0: float, seq: Pgse, u_g) -> float:
    """Narrow-pulse STA: D0 [1 - 4√(D0 Δ)/(3√π) · A_ug/|Ω|]"""
    if D0 <= 0:
        raise ParameterError(f"D0 must be positive, got {D0}")
    return D0 * (1.0 - 4.0 * math.sqrt(D0 * seq.Delta) / (3.0 * SQRT_PI) * _surface_ratio(mesh, u_g))


def adc_from_signals(S0: float, Sb: float, b: float) -> float:
    """-log(Sb/S0)/b with b in s/mm², result in μm²/ms"""
    if S0 <= 0 or Sb <= 0:
        raise ParameterError(f"Signals must be positive, got S0={S0}, Sb={Sb}")
    if b <= 0:
        raise ParameterError(f"b-value must be positive, got {b}")
    return -math.log(Sb / S0) / b_internal(b)
