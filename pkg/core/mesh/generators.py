"""
Analytic Test Meshes
====================
Structured meshes for validation geometries: boxes (line-segment / box
eigenvalue oracles), voxel-mask unions such as a dumbbell (localization),
and a ball obtained by mapping a cube radially (surface-to-volume checks).

Every hexahedral cell is split into 6 tetrahedra along its 000->111
diagonal, so neighbouring cells share conforming faces.
"""

import itertools
import logging
from typing import Sequence, Tuple, Union

import numpy as np

from ..errors import ParameterError
from .mesh import Mesh, build_mesh

logger = logging.getLogger(__name__)

MAX_GRID_NODES = 50_000_000

Counts = Union[int, Sequence[int]]


def _counts(n_per_axis: Counts) -> Tuple[int, int, int]:
    if np.isscalar(n_per_axis):
        counts = (int(n_per_axis),) * 3
    else:
        counts = tuple(int(n) for n in n_per_axis)
    if len(counts) != 3 or min(counts) < 1:
        raise ParameterError(f"Cell counts must be three integers >= 1, got {n_per_axis}")
    total = (counts[0] + 1) * (counts[1] + 1) * (counts[2] + 1)
    if total > MAX_GRID_NODES:
        raise ParameterError(f"Grid of {counts} needs {total} nodes, above the {MAX_GRID_NODES} limit")
    return counts


def _kuhn_offsets() -> np.ndarray:
    """(6, 4, 3) corner offsets of the six tetrahedra of a unit cell"""
    tets = []
    for perm in itertools.permutations(range(3)):
        corner = np.zeros(3, dtype=int)
        path = [corner.copy()]
        for axis in perm:
            corner[axis] = 1
            path.append(corner.copy())
        tets.append(path)
    return np.array(tets)


def _grid(origin, extents, counts) -> Tuple[np.ndarray, np.ndarray]:
    """Grid nodes (i fastest) and per-cell tetrahedra, all cells"""
    nx, ny, nz = counts
    xs = origin[0] + np.linspace(0.0, extents[0], nx + 1)
    ys = origin[1] + np.linspace(0.0, extents[1], ny + 1)
    zs = origin[2] + np.linspace(0.0, extents[2], nz + 1)
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    k, j, i = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    cells = np.column_stack([i.ravel(), j.ravel(), k.ravel()])          # (N_c, 3)

    offsets = _kuhn_offsets()                                           # (6, 4, 3)
    corner = cells[:, None, None, :] + offsets[None]                    # (N_c, 6, 4, 3)
    index = corner[..., 0] + (nx + 1) * (corner[..., 1] + (ny + 1) * corner[..., 2])
    return nodes, index.reshape(-1, 6, 4)


def generate_box_mesh(Lx: float, Ly: float, Lz: float, n_per_axis: Counts) -> Mesh:
    """
    Structured mesh of [0,Lx] x [0,Ly] x [0,Lz].

    Node index = i + (nx+1) * (j + (ny+1) * k).
    """
    extents = (float(Lx), float(Ly), float(Lz))
    if min(extents) <= 0:
        raise ParameterError(f"Box extents must be positive, got {extents}")
    counts = _counts(n_per_axis)

    nodes, tets = _grid((0.0, 0.0, 0.0), extents, counts)
    mesh, _ = build_mesh(nodes, tets.reshape(-1, 4))
    logger.debug(f"Box mesh {extents} / {counts}: {mesh.n_nodes} nodes, {mesh.n_elements} elements")
    return mesh


def generate_voxel_mesh(spacing: float, mask: np.ndarray, origin=(0.0, 0.0, 0.0)) -> Mesh:
    """
    Mesh of the union of the cubic cells where mask[i, j, k] is true.
    Unused grid nodes are removed.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 3 or not mask.any():
        raise ParameterError("Voxel mask must be a non-empty 3D boolean array")
    if spacing <= 0:
        raise ParameterError(f"Voxel spacing must be positive, got {spacing}")

    counts = mask.shape
    extents = tuple(spacing * n for n in counts)
    nodes, tets = _grid(origin, extents, counts)

    # cells are enumerated with i fastest; mask is indexed [i, j, k]
    keep = mask.transpose(2, 1, 0).ravel()
    elements = tets[keep].reshape(-1, 4)

    used, inverse = np.unique(elements, return_inverse=True)
    mesh, _ = build_mesh(nodes[used], inverse.reshape(-1, 4))
    return mesh


def generate_dumbbell_mesh(
    box: float = 4.0,
    bridge_length: float = 4.0,
    bridge_width: float = 1.0,
    spacing: float = 0.5,
) -> Mesh:
    """Two cubes of side `box` joined along x by a square bridge"""
    for name, value in (("box", box), ("bridge_length", bridge_length),
                        ("bridge_width", bridge_width), ("spacing", spacing)):
        if value <= 0:
            raise ParameterError(f"{name} must be positive, got {value}")
    if bridge_width > box:
        raise ParameterError("Bridge cannot be wider than the boxes")

    nx = int(round((2 * box + bridge_length) / spacing))
    ny = nz = int(round(box / spacing))
    centers_x = (np.arange(nx) + 0.5) * spacing
    centers_yz = (np.arange(ny) + 0.5) * spacing

    cx = centers_x[:, None, None]
    cy = centers_yz[None, :, None]
    cz = centers_yz[None, None, :]

    in_boxes = (cx < box) | (cx > box + bridge_length)
    half = 0.5 * box
    in_bridge = (np.abs(cy - half) < 0.5 * bridge_width) & (np.abs(cz - half) < 0.5 * bridge_width)
    mask = np.broadcast_to(in_boxes | in_bridge, (nx, ny, nz))
    return generate_voxel_mesh(spacing, mask)


def generate_ball_mesh(radius: float, n_per_axis: int) -> Mesh:
    """
    Ball of given radius: a cube [-1,1]^3 mesh mapped by
    p -> p * |p|_inf / |p|_2 * radius. Boundary nodes land on the sphere.
    """
    if radius <= 0:
        raise ParameterError(f"Radius must be positive, got {radius}")
    counts = _counts(n_per_axis)

    nodes, tets = _grid((-1.0, -1.0, -1.0), (2.0, 2.0, 2.0), counts)
    norm_inf = np.max(np.abs(nodes), axis=1)
    norm_2 = np.linalg.norm(nodes, axis=1)
    scale = np.ones_like(norm_2)
    nonzero = norm_2 > 0
    scale[nonzero] = norm_inf[nonzero] / norm_2[nonzero]
    mesh, _ = build_mesh(nodes * (scale * radius)[:, None], tets.reshape(-1, 4))
    return mesh
