"""
FEM Module
==========
P1 assembly of mass, stiffness and first-moment matrices.
"""

from .assembly import (
    FemMatrices,
    assemble,
    barycentric_gradients,
    dump_matrices,
)

__all__ = [
    "FemMatrices",
    "assemble",
    "barycentric_gradients",
    "dump_matrices",
]
