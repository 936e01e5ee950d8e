"""
Mesh Files
==========
Reader and canonical writer for TetGen-style `.node` / `.ele` files.

.node:  first line `N_v 3 n_attr n_marker`, then `index x y z [attr...] [marker]`
.ele:   first line `N_e 4 n_attr`, then `index v1 v2 v3 v4 [attr...]`

Indices are 1-based in canonical files; the base actually used is taken
from the first node index (TetGen also writes 0-based files). Attribute
and marker columns are discarded and noted in the load report. Lines
starting with `#` and blank lines are ignored.
"""

import hashlib
import logging
import os
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from ..errors import MeshFormatError, MeshIndexError
from .mesh import Mesh, MeshReport, build_mesh

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _data_lines(path: Path) -> List[Tuple[int, List[str]]]:
    text = path.read_text()
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if content:
            lines.append((lineno, content.split()))
    return lines


def _parse_header(path: Path, lines, expected_dim: int, what: str) -> Tuple[int, int, int]:
    if not lines:
        raise MeshFormatError(f"Empty {what} file", path=str(path))
    lineno, tokens = lines[0]
    try:
        header = [int(t) for t in tokens]
    except ValueError:
        raise MeshFormatError(f"Malformed {what} header '{' '.join(tokens)}'", path=str(path), line=lineno)
    if len(header) < 2:
        raise MeshFormatError(f"{what} header needs at least two fields", path=str(path), line=lineno)
    count, dim = header[0], header[1]
    if dim != expected_dim:
        raise MeshFormatError(
            f"{what} header declares {dim} per entry, expected {expected_dim}", path=str(path), line=lineno
        )
    n_attr = header[2] if len(header) > 2 else 0
    n_marker = header[3] if len(header) > 3 else 0
    if len(lines) - 1 < count:
        raise MeshFormatError(
            f"{what} file declares {count} entries but holds {len(lines) - 1}", path=str(path), line=lines[-1][0]
        )
    return count, n_attr, n_marker


def read_tetgen(node_path: PathLike, ele_path: PathLike) -> Tuple[Mesh, MeshReport]:
    """Parse, validate and orient a node/element file pair"""
    node_path, ele_path = Path(node_path), Path(ele_path)

    node_lines = _data_lines(node_path)
    n_nodes, n_node_attr, n_node_marker = _parse_header(node_path, node_lines, 3, "node")

    nodes = np.empty((n_nodes, 3), dtype=np.float64)
    base = None
    for row, (lineno, tokens) in enumerate(node_lines[1:n_nodes + 1]):
        if len(tokens) < 4:
            raise MeshFormatError(f"Node line needs index and 3 coordinates", path=str(node_path), line=lineno)
        try:
            index = int(tokens[0])
            nodes[row] = [float(t) for t in tokens[1:4]]
        except ValueError:
            raise MeshFormatError(f"Malformed node line '{' '.join(tokens)}'", path=str(node_path), line=lineno)
        if base is None:
            if index not in (0, 1):
                raise MeshFormatError(f"First node index must be 0 or 1, got {index}", path=str(node_path), line=lineno)
            base = index
        if index != row + base:
            raise MeshFormatError(
                f"Node index {index} out of sequence (expected {row + base})", path=str(node_path), line=lineno
            )

    ele_lines = _data_lines(ele_path)
    n_elements, n_ele_attr, _ = _parse_header(ele_path, ele_lines, 4, "element")

    base = base if base is not None else 1
    elements = np.empty((n_elements, 4), dtype=np.int64)
    for row, (lineno, tokens) in enumerate(ele_lines[1:n_elements + 1]):
        if len(tokens) < 5:
            raise MeshFormatError(f"Element line needs index and 4 node indices", path=str(ele_path), line=lineno)
        try:
            elements[row] = [int(t) for t in tokens[1:5]]
        except ValueError:
            raise MeshFormatError(f"Malformed element line '{' '.join(tokens)}'", path=str(ele_path), line=lineno)
        outside = [v for v in elements[row].tolist() if not base <= v < n_nodes + base]
        if outside:
            raise MeshIndexError(
                f"Element {row + 1} references node {outside[0]} outside {base}..{n_nodes + base - 1}",
                path=str(ele_path), line=lineno, element=row + 1,
            )

    elements -= base

    mesh, report = build_mesh(nodes, elements)

    if n_node_attr or n_node_marker or n_ele_attr:
        report.discarded_markers = True
        msg = (
            f"Discarded attribute/marker columns (node attrs {n_node_attr}, "
            f"node markers {n_node_marker}, element attrs {n_ele_attr})"
        )
        logger.warning(msg)
        report.warnings.append(msg)

    logger.info(
        f"Loaded mesh {node_path.name}: {mesh.n_nodes} nodes, "
        f"{mesh.n_elements} elements, {mesh.n_faces} boundary faces"
    )
    return mesh, report


def load_mesh(node_path: PathLike, ele_path: PathLike) -> Mesh:
    mesh, _ = read_tetgen(node_path, ele_path)
    return mesh


# === Canonical writer ===

def canonical_node_text(mesh: Mesh) -> str:
    lines = [f"{mesh.n_nodes} 3 0 0"]
    for i, (x, y, z) in enumerate(mesh.nodes.tolist(), start=1):
        lines.append(f"{i} {x:.17g} {y:.17g} {z:.17g}")
    return "\n".join(lines) + "\n"


def canonical_ele_text(mesh: Mesh) -> str:
    lines = [f"{mesh.n_elements} 4 0"]
    for i, (a, b, c, d) in enumerate((mesh.elements + 1).tolist(), start=1):
        lines.append(f"{i} {a} {b} {c} {d}")
    return "\n".join(lines) + "\n"


def save_mesh(mesh: Mesh, node_path: PathLike, ele_path: PathLike):
    """Write the canonical text form (LF endings, 17 significant digits)"""
    for path, text in ((Path(node_path), canonical_node_text(mesh)), (Path(ele_path), canonical_ele_text(mesh))):
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    logger.debug(f"Saved mesh to {node_path} / {ele_path}")


def mesh_fingerprint(mesh: Mesh) -> bytes:
    """SHA-256 of the canonical node + element text"""
    h = hashlib.sha256()
    h.update(canonical_node_text(mesh).encode("ascii"))
    h.update(canonical_ele_text(mesh).encode("ascii"))
    return h.digest()
