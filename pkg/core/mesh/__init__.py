"""
Mesh Module
===========
Tetrahedral mesh ingestion, analytic test meshes and geometric queries.
"""

from .mesh import (
    Mesh,
    MeshReport,
    build_mesh,
    drop_dangling_nodes,
    translate,
    volume,
    surface_area,
    directional_area,
    boundary_normal_sum,
    centroid,
    second_moments,
    DEGENERATE_VOLUME,
)
from .io import (
    read_tetgen,
    load_mesh,
    save_mesh,
    mesh_fingerprint,
    canonical_node_text,
    canonical_ele_text,
)
from .generators import (
    generate_box_mesh,
    generate_voxel_mesh,
    generate_dumbbell_mesh,
    generate_ball_mesh,
)

__all__ = [
    "Mesh",
    "MeshReport",
    "build_mesh",
    "drop_dangling_nodes",
    "translate",
    "volume",
    "surface_area",
    "directional_area",
    "boundary_normal_sum",
    "centroid",
    "second_moments",
    "DEGENERATE_VOLUME",
    "read_tetgen",
    "load_mesh",
    "save_mesh",
    "mesh_fingerprint",
    "canonical_node_text",
    "canonical_ele_text",
    "generate_box_mesh",
    "generate_voxel_mesh",
    "generate_dumbbell_mesh",
    "generate_ball_mesh",
]
