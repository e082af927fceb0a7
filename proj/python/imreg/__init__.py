"""Incremental multiview point cloud registration."""

from ._imreg import (
    DegenerateError,
    Error,
    Frame,
    InvalidArgument,
    ParseError,
    PipelineConfig,
    Pose,
    evaluate,
    generate_aisle_scene,
    generate_scene,
    keep_new_probability,
    overlap_ratio,
    procrustes,
    read_ply,
    register_pair,
    register_scene,
    rotation_average,
    translation_average,
    write_ply,
)

__all__ = [
    "DegenerateError",
    "Error",
    "Frame",
    "InvalidArgument",
    "ParseError",
    "PipelineConfig",
    "Pose",
    "evaluate",
    "generate_aisle_scene",
    "generate_scene",
    "keep_new_probability",
    "overlap_ratio",
    "procrustes",
    "read_ply",
    "register_pair",
    "register_scene",
    "rotation_average",
    "translation_average",
    "write_ply",
]
