"""
SpectralDMRI Core
=================
Diffusion MRI signal simulation on tetrahedral meshes: Laplace
eigenfunctions, Matrix Formalism and the Bloch-Torrey reference.
"""

from .models import (
    # Enums
    Method,
    RunMethod,

    # Data structures
    SignalRecord,
    DirectionSweep,

    # Helpers
    pair_sweeps,
)
from .errors import SpectralDMRIError, exit_code_for

__all__ = [
    "Method",
    "RunMethod",
    "SignalRecord",
    "DirectionSweep",
    "pair_sweeps",
    "SpectralDMRIError",
    "exit_code_for",
]
