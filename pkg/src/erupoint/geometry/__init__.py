from erupoint.geometry.bounding_box_utils import (
    Aabb,
    Ray,
    aabb_iou,
    angle_between,
    ray_aabb_intersect,
)
from erupoint.geometry.point_cloud import (
    PointCloud,
    concatenate,
    resample_fixed,
    voxel_downsample,
)
from erupoint.geometry.transforms import RigidTransform

__all__ = (
    "Aabb",
    "PointCloud",
    "Ray",
    "RigidTransform",
    "aabb_iou",
    "angle_between",
    "concatenate",
    "ray_aabb_intersect",
    "resample_fixed",
    "voxel_downsample",
)
