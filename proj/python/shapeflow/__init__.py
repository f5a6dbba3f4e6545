"""Controllable 3D shape generation toolkit.

Geometry kernels (SDF primitives, marching cubes, voxelization, chamfer),
multi-modal condition construction, and the flow-matching generation
pipeline, backed by the C++ core.
"""

from ._shapeflow import (  # noqa: F401
    Condition,
    Pipeline,
    SdfPrimitive,
    bbox_condition,
    bbox_of,
    chamfer,
    gen_dataset,
    humanoid_fk,
    make_condition,
    make_sdf_grid,
    marching_cubes,
    point_condition,
    pos_embed,
    render_depth,
    sample_surface,
    sdf_eval,
    skeleton_condition,
    voxel_condition,
    voxelize,
)

__all__ = [
    "Condition",
    "Pipeline",
    "SdfPrimitive",
    "bbox_condition",
    "bbox_of",
    "chamfer",
    "gen_dataset",
    "humanoid_fk",
    "make_condition",
    "make_sdf_grid",
    "marching_cubes",
    "point_condition",
    "pos_embed",
    "render_depth",
    "sample_surface",
    "sdf_eval",
    "skeleton_condition",
    "voxel_condition",
    "voxelize",
]
