"""
Spectral Module
===============
Certified Laplace eigenpairs on an interval, inertia counts and the
binary eigen cache.
"""

from .eigensolver import (
    LaplaceEig,
    solve_interval,
    lambda_max_for,
    length_scale,
    eigen_table,
)
from .inertia import count_below
from .storage import save_eig, load_eig, cache_path

__all__ = [
    "LaplaceEig",
    "solve_interval",
    "lambda_max_for",
    "length_scale",
    "eigen_table",
    "count_below",
    "save_eig",
    "load_eig",
    "cache_path",
]
