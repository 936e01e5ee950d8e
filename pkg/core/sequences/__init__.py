"""
Sequences Module
================
PGSE definitions, b-value conversion and gradient direction sets.
"""

from .pgse import (
    Pgse,
    Gradient,
    bvalue,
    bvalue_quadrature,
    amplitude_for_b,
    b_internal,
    diffusion_time_series,
)
from .directions import fibonacci_directions

__all__ = [
    "Pgse",
    "Gradient",
    "bvalue",
    "bvalue_quadrature",
    "amplitude_for_b",
    "b_internal",
    "diffusion_time_series",
    "fibonacci_directions",
]
