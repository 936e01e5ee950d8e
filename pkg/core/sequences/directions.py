"""
Gradient Directions
===================
Deterministic Fibonacci-lattice direction sets.

Full sphere, n points:  z_i = 1 - (2i + 1)/n,  azimuth i * golden angle.
Hemisphere, n points:   the z > 0 half of the 2n-point sphere lattice.
n = 1 returns (1, 0, 0) in both modes.
"""

import math

import numpy as np

from ..errors import ParameterError

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def _lattice(n: int) -> np.ndarray:
    i = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = i * GOLDEN_ANGLE
    v = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return v / np.linalg.norm(v, axis=1)[:, None]


def fibonacci_directions(n: int, hemisphere: bool = False) -> np.ndarray:
    """(n, 3) unit vectors"""
    if n < 1:
        raise ParameterError(f"Direction count must be >= 1, got {n}")
    if n == 1:
        return np.array([[1.0, 0.0, 0.0]])
    if hemisphere:
        return _lattice(2 * n)[:n]
    return _lattice(n)
