"""
P1 Finite Element Assembly
==========================
Mass, stiffness and first-moment matrices on a tetrahedral mesh, with
exact element integration:

    M_jk   = ∫ φ_j φ_k
    S_jk   = ∫ D0 ∇φ_j · ∇φ_k
    J^i_jk = ∫ x_i φ_j φ_k          (i = x, y, z)

Element integrals use barycentric coordinates λ_a:
∫ λ1^a λ2^b λ3^c λ4^d dV = 6V a! b! c! d! / (a+b+c+d+3)!.

Moment matrices are stored in the mesh's own coordinates; the domain
centroid is recorded so consumers can center them (J^i - c_i M).

All matrices are held as full symmetric CSR (both triangles, sorted
indices); only the debug dump is upper-triangular.
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import scipy.sparse as sp

from ..errors import ParameterError
from ..mesh import Mesh, mesh_fingerprint
from ..mesh.mesh import assert_valid

logger = logging.getLogger(__name__)


def _moment_tensor() -> np.ndarray:
    """C[a,b,c] = ∫ λa λb λc dV / V"""
    C = np.empty((4, 4, 4))
    for a in range(4):
        for b in range(4):
            for c in range(4):
                distinct = len({a, b, c})
                C[a, b, c] = {1: 6.0, 2: 2.0, 3: 1.0}[distinct] / 120.0
    return C


_MASS_LOCAL = (np.ones((4, 4)) + np.eye(4)) / 20.0
_MOMENT_LOCAL = _moment_tensor()


@dataclass(frozen=True)
class FemMatrices:
    """
    Assembled sparse matrices (CSR, full symmetric pattern, sorted indices).

    mass       μm³
    stiffness  μm³/ms (includes D0)
    moments    (J^x, J^y, J^z), μm⁴, uncentered
    """
    mass: sp.csr_matrix
    stiffness: sp.csr_matrix
    moments: Tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]
    D0: float
    volume: float
    centroid: np.ndarray
    second_moments: np.ndarray        # exact ∫ x_i² dx
    fingerprint: bytes

    @property
    def n_nodes(self) -> int:
        return self.mass.shape[0]

    def centered_moment(self, axis: int) -> sp.csr_matrix:
        return (self.moments[axis] - self.centroid[axis] * self.mass).tocsr()

    def gradient_moment(self, g) -> sp.csr_matrix:
        """Σ g_i (J^i - c_i M) for a gradient vector g"""
        g = np.asarray(g, dtype=float).reshape(3)
        W = sp.csr_matrix(self.mass.shape)
        for i in range(3):
            if g[i] != 0.0:
                W = W + g[i] * self.centered_moment(i)
        return W.tocsr()


def _assemble_global(elements: np.ndarray, local: np.ndarray, n: int) -> sp.csr_matrix:
    rows = np.repeat(elements, 4, axis=1).ravel()
    cols = np.tile(elements, (1, 4)).ravel()
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A


def barycentric_gradients(mesh: Mesh) -> Tuple[np.ndarray, np.ndarray]:
    """(∇λ_a per element (N_e, 4, 3), volumes (N_e,))"""
    p = mesh.nodes[mesh.elements]                      # (N_e, 4, 3)
    T = np.ones((mesh.n_elements, 4, 4))
    T[:, :, 1:] = p
    T_inv = np.linalg.inv(T)
    grads = np.transpose(T_inv[:, 1:, :], (0, 2, 1))  # row a = ∇λ_a
    vols = np.abs(np.linalg.det(T)) / 6.0
    return grads, vols


def assemble(mesh: Mesh, D0: float) -> FemMatrices:
    """
    Assemble M, S and J^x, J^y, J^z.

    Element order and local accumulation order are fixed, so identical
    meshes give bit-identical matrices.
    """
    if not D0 > 0:
        raise ParameterError(f"D0 must be positive, got {D0}")
    assert_valid(mesh)

    n = mesh.n_nodes
    elements = mesh.elements
    grads, vols = barycentric_gradients(mesh)

    mass_local = vols[:, None, None] * _MASS_LOCAL[None]
    stiff_local = D0 * vols[:, None, None] * np.einsum("eai,ebi->eab", grads, grads)

    p = mesh.nodes[elements]                           # (N_e, 4, 3)
    moments = []
    for axis in range(3):
        local = vols[:, None, None] * np.einsum("abc,ec->eab", _MOMENT_LOCAL, p[:, :, axis])
        moments.append(_assemble_global(elements, local, n))

    M = _assemble_global(elements, mass_local, n)
    S = _assemble_global(elements, stiff_local, n)

    ones = np.ones(n)
    vol = float(ones @ (M @ ones))
    first = np.array([ones @ (J @ ones) for J in moments])
    coords = mesh.nodes
    second = np.array([coords[:, i] @ (M @ coords[:, i]) for i in range(3)])

    logger.info(f"Assembled FEM matrices: {n} nodes, {mesh.n_elements} elements, nnz(M) = {M.nnz}")

    return FemMatrices(
        mass=M,
        stiffness=S,
        moments=tuple(moments),
        D0=float(D0),
        volume=vol,
        centroid=first / vol,
        second_moments=second,
        fingerprint=mesh_fingerprint(mesh),
    )


def dump_matrices(fem: FemMatrices, directory: Union[str, Path]):
    """
    Debug dump in coordinate text form: one `i j value` line per
    upper-triangle entry, 1-based, 17 significant digits.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    named = [("mass", fem.mass), ("stiffness", fem.stiffness)]
    named += [(f"moment_{axis}", J) for axis, J in zip("xyz", fem.moments)]

    for name, A in named:
        upper = sp.triu(A).tocoo()
        order = np.lexsort((upper.col, upper.row))
        path = directory / f"{name}.coo"
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", newline="\n") as f:
            f.write(f"{A.shape[0]} {A.shape[1]} {upper.nnz}\n")
            for i, j, v in zip(upper.row[order] + 1, upper.col[order] + 1, upper.data[order]):
                f.write("%d %d %.17g\n" % (i, j, v))
        os.replace(tmp, path)
    logger.info(f"Dumped FEM matrices to {directory}")
