"""
Tetrahedral Mesh
================
Immutable P1 tetrahedral mesh with validation and geometric queries.

Validation orients every element positively, extracts the watertight
boundary with outward-facing triangles and checks connectivity.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ..errors import (
    MeshError,
    MeshFormatError,
    MeshIndexError,
    DegenerateElementError,
    DisconnectedMeshError,
    ParameterError,
)

logger = logging.getLogger(__name__)

DEGENERATE_VOLUME = 1e-12      # μm³
UNIT_TOLERANCE = 1e-12

# Local faces of a tetrahedron and the vertex opposite each
_LOCAL_FACES = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])
_OPPOSITE = np.array([0, 1, 2, 3])


@dataclass(frozen=True)
class Mesh:
    """
    Tetrahedral mesh in canonical units (μm).

    nodes:           (N_v, 3) float64 coordinates
    elements:        (N_e, 4) int64, 0-based, positive signed volume
    boundary_faces:  (N_f, 3) int64, counter-clockwise seen from outside
    """
    nodes: np.ndarray
    elements: np.ndarray
    boundary_faces: np.ndarray
    unit_scale: str = "um"

    def __post_init__(self):
        for arr in (self.nodes, self.elements, self.boundary_faces):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def n_elements(self) -> int:
        return int(self.elements.shape[0])

    @property
    def n_faces(self) -> int:
        return int(self.boundary_faces.shape[0])

    @cached_property
    def element_volumes(self) -> np.ndarray:
        return signed_volumes(self.nodes, self.elements)

    @cached_property
    def face_normals(self) -> Tuple[np.ndarray, np.ndarray]:
        """(areas, unit outward normals) of the boundary triangles"""
        p = self.nodes[self.boundary_faces]
        cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        norm = np.linalg.norm(cross, axis=1)
        return 0.5 * norm, cross / norm[:, None]

    @cached_property
    def dangling_nodes(self) -> np.ndarray:
        used = np.zeros(self.n_nodes, dtype=bool)
        used[self.elements.ravel()] = True
        return np.flatnonzero(~used)

    @property
    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.nodes.min(axis=0), self.nodes.max(axis=0)


@dataclass
class MeshReport:
    """What validation found while building a mesh"""
    n_nodes: int = 0
    n_elements: int = 0
    n_faces: int = 0
    reoriented: int = 0
    dangling_nodes: List[int] = field(default_factory=list)
    discarded_markers: bool = False
    warnings: List[str] = field(default_factory=list)


# === Construction / validation ===

def signed_volumes(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    p = nodes[elements]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    d3 = p[:, 3] - p[:, 0]
    return np.einsum("ij,ij->i", d1, np.cross(d2, d3)) / 6.0


def build_mesh(
    nodes: np.ndarray,
    elements: np.ndarray,
    unit_scale: str = "um",
    check_connected: bool = True,
) -> Tuple[Mesh, MeshReport]:
    """
    Validate raw arrays and return an oriented Mesh.

    Raises MeshIndexError, DegenerateElementError, MeshFormatError
    (non-manifold face) and DisconnectedMeshError. Dangling nodes are
    kept and reported as warnings.
    """
    nodes = np.ascontiguousarray(nodes, dtype=np.float64)
    elements = np.array(elements, dtype=np.int64)
    report = MeshReport()

    if nodes.ndim != 2 or nodes.shape[1] != 3:
        raise MeshFormatError(f"Nodes must be an (N, 3) array, got shape {nodes.shape}")
    if elements.ndim != 2 or elements.shape[1] != 4 or elements.shape[0] == 0:
        raise MeshFormatError(f"Elements must be a non-empty (N, 4) array, got shape {elements.shape}")
    if not np.all(np.isfinite(nodes)):
        raise MeshFormatError("Node coordinates contain non-finite values")

    n_nodes = nodes.shape[0]
    bad = (elements < 0) | (elements >= n_nodes)
    if bad.any():
        e, _ = np.argwhere(bad)[0]
        raise MeshIndexError(
            f"Element {e + 1} references node {elements[e][bad[e]][0]} outside 0..{n_nodes - 1}",
            element=int(e) + 1,
        )

    # Orientation fix: swap two vertices of negatively oriented elements
    vols = signed_volumes(nodes, elements)
    negative = vols < 0
    if negative.any():
        elements[negative, 2], elements[negative, 3] = (
            elements[negative, 3].copy(), elements[negative, 2].copy()
        )
        report.reoriented = int(negative.sum())
        logger.debug(f"Reoriented {report.reoriented} elements")
        vols = np.abs(vols)

    degenerate = vols < DEGENERATE_VOLUME
    if degenerate.any():
        idx = np.flatnonzero(degenerate)
        raise DegenerateElementError(
            f"{idx.size} degenerate elements (volume < {DEGENERATE_VOLUME} um^3), first is element {idx[0]}",
            elements=idx[:20].tolist(),
        )

    faces = extract_boundary_faces(nodes, elements)

    if check_connected:
        n_components = count_components(n_nodes, elements)
        if n_components != 1:
            raise DisconnectedMeshError(f"Mesh has {n_components} connected components")

    mesh = Mesh(nodes=nodes, elements=elements, boundary_faces=faces, unit_scale=unit_scale)

    dangling = mesh.dangling_nodes
    if dangling.size:
        msg = f"{dangling.size} dangling nodes retained (referenced by no element)"
        logger.warning(msg)
        report.dangling_nodes = dangling.tolist()
        report.warnings.append(msg)

    report.n_nodes = mesh.n_nodes
    report.n_elements = mesh.n_elements
    report.n_faces = mesh.n_faces
    return mesh, report


def extract_boundary_faces(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """Faces incident to exactly one element, oriented outward"""
    faces = elements[:, _LOCAL_FACES].reshape(-1, 3)
    opposite = elements[:, _OPPOSITE].reshape(-1)

    keys = np.sort(faces, axis=1)
    _, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
    if (counts > 2).any():
        raise MeshFormatError(f"{int((counts > 2).sum())} faces shared by more than two elements")

    boundary = first[counts == 1]
    boundary.sort()
    tri = faces[boundary].copy()
    opp = opposite[boundary]

    p = nodes[tri]
    normal = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    inward = np.einsum("ij,ij->i", normal, nodes[opp] - p[:, 0]) > 0
    tri[inward, 1], tri[inward, 2] = tri[inward, 2].copy(), tri[inward, 1].copy()
    return tri


def count_components(n_nodes: int, elements: np.ndarray) -> int:
    """Connected components among nodes used by elements (edge graph)"""
    pairs = np.array([(a, b) for a in range(4) for b in range(a + 1, 4)])
    rows = elements[:, pairs[:, 0]].ravel()
    cols = elements[:, pairs[:, 1]].ravel()
    graph = sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n_nodes, n_nodes))
    _, labels = connected_components(graph, directed=False)
    used = np.unique(elements)
    return int(np.unique(labels[used]).size)


def drop_dangling_nodes(mesh: Mesh) -> Mesh:
    """Remove nodes no element references and renumber"""
    dangling = mesh.dangling_nodes
    if dangling.size == 0:
        return mesh

    keep = np.ones(mesh.n_nodes, dtype=bool)
    keep[dangling] = False
    new_index = np.cumsum(keep) - 1
    logger.info(f"Dropping {dangling.size} dangling nodes before assembly")
    return Mesh(
        nodes=mesh.nodes[keep].copy(),
        elements=new_index[mesh.elements],
        boundary_faces=new_index[mesh.boundary_faces],
        unit_scale=mesh.unit_scale,
    )


def translate(mesh: Mesh, offset) -> Mesh:
    """Rigidly translate every node"""
    offset = np.asarray(offset, dtype=float).reshape(3)
    return Mesh(
        nodes=mesh.nodes + offset,
        elements=mesh.elements.copy(),
        boundary_faces=mesh.boundary_faces.copy(),
        unit_scale=mesh.unit_scale,
    )


# === Geometry ===

def _check_unit(u_g) -> np.ndarray:
    u = np.asarray(u_g, dtype=float).reshape(3)
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOLERANCE:
        raise ParameterError(f"Direction must be a unit vector, |u| = {np.linalg.norm(u):.17g}")
    return u


def volume(mesh: Mesh) -> float:
    return float(np.sum(mesh.element_volumes))


def surface_area(mesh: Mesh) -> float:
    areas, _ = mesh.face_normals
    return float(np.sum(areas))


def directional_area(mesh: Mesh, u_g) -> float:
    """A_ug = sum over boundary faces of area * (u_g . n)^2"""
    u = _check_unit(u_g)
    areas, normals = mesh.face_normals
    return float(np.sum(areas * (normals @ u) ** 2))


def boundary_normal_sum(mesh: Mesh) -> np.ndarray:
    """Area-weighted outward normal sum; zero for a closed surface"""
    areas, normals = mesh.face_normals
    return np.sum(areas[:, None] * normals, axis=0)


def centroid(mesh: Mesh) -> np.ndarray:
    vols = mesh.element_volumes
    centers = mesh.nodes[mesh.elements].mean(axis=1)
    return np.sum(vols[:, None] * centers, axis=0) / np.sum(vols)


def second_moments(mesh: Mesh) -> np.ndarray:
    """Exact integrals of x^2, y^2, z^2 over the mesh"""
    vols = mesh.element_volumes
    p = mesh.nodes[mesh.elements]                      # (N_e, 4, 3)
    per_elem = (np.sum(p ** 2, axis=1) + np.sum(p, axis=1) ** 2) / 20.0
    return np.sum(vols[:, None] * per_elem, axis=0)


def assert_valid(mesh: Mesh):
    """Re-check used before assembly"""
    if mesh.dangling_nodes.size:
        raise MeshError(
            f"Mesh has {mesh.dangling_nodes.size} dangling nodes; call drop_dangling_nodes first"
        )
    if (mesh.element_volumes < DEGENERATE_VOLUME).any():
        raise DegenerateElementError("Mesh contains degenerate or inverted elements")
