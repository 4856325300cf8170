from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from erupoint.geometry.point_cloud import PointCloud, as_point

# tolerance on unit ray directions
DIRECTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box with min <= max componentwise."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        box_min = as_point(self.min)
        box_max = as_point(self.max)
        if np.any(box_min > box_max):
            raise ValueError(
                f"box min must not exceed max, got {box_min} > {box_max}"
            )
        object.__setattr__(self, "min", box_min)
        object.__setattr__(self, "max", box_max)

    @classmethod
    def from_points(cls, points: np.ndarray) -> "Aabb":
        """Get the axis-aligned bounding box around a set of points."""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        if len(points) == 0:
            raise ValueError("cannot bound an empty point set")
        return cls(min=points.min(axis=0), max=points.max(axis=0))

    @classmethod
    def from_center_size(cls, center, size) -> "Aabb":
        center = as_point(center)
        half = as_point(size) / 2
        return cls(min=center - half, max=center + half)

    @property
    def center(self) -> np.ndarray:
        return (self.min + self.max) / 2

    @property
    def size(self) -> np.ndarray:
        return self.max - self.min

    @property
    def volume(self) -> float:
        return float(np.prod(self.size))

    def expand(self, amount: float) -> "Aabb":
        """Expand the box bidirectionally along each axis by `amount`."""
        return Aabb(min=self.min - amount, max=self.max + amount)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of the points inside the box (boundary inclusive)."""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        return np.all((points >= self.min) & (points <= self.max), axis=1)

    def transformed(self, rotation: np.ndarray, translation) -> "Aabb":
        """Bounding box of this box's corners after a rigid transform."""
        corners = self.corners() @ np.asarray(rotation).T + as_point(translation)
        return Aabb.from_points(corners)

    def corners(self) -> np.ndarray:
        """The eight corners as an (8, 3) array."""
        bounds = np.stack([self.min, self.max])
        index = np.array(np.meshgrid([0, 1], [0, 1], [0, 1], indexing="ij"))
        index = index.reshape(3, -1).T
        return bounds[index, [0, 1, 2]]

    def to_dict(self):
        return {"min": self.min.tolist(), "max": self.max.tolist()}

    @classmethod
    def from_dict(cls, data) -> "Aabb":
        return cls(min=data["min"], max=data["max"])


@dataclass(frozen=True)
class Ray:
    """A half-line from `origin` along the unit vector `dir`."""

    origin: np.ndarray
    dir: np.ndarray

    def __post_init__(self):
        origin = as_point(self.origin)
        direction = as_point(self.dir)
        if abs(np.linalg.norm(direction) - 1) > DIRECTION_TOLERANCE:
            raise ValueError("ray direction must be a unit vector")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "dir", direction)

    @classmethod
    def through(cls, origin, target) -> "Ray":
        """The ray from `origin` passing through `target`."""
        origin = as_point(origin)
        direction = as_point(target) - origin
        length = np.linalg.norm(direction)
        if length == 0:
            raise ValueError("ray origin and target coincide")
        return cls(origin=origin, dir=direction / length)

    def at(self, t) -> np.ndarray:
        return self.origin + np.multiply.outer(t, self.dir)


def ray_aabb_intersect(
    r: Ray, b: Aabb
) -> Optional[Tuple[float, float]]:
    """Intersect a ray with a box using the slab method.

    Returns
    -------
    interval : tuple of float or None
        (t_near, t_far) of the ray parameters where the infinite line enters
        and leaves the box, or None when the ray misses. A hit requires
        t_far >= max(t_near, 0); grazing the boundary counts as a hit.
        t_near is negative when the origin lies inside the box.
    """
    t_near = -np.inf
    t_far = np.inf
    for axis in range(3):
        origin = r.origin[axis]
        direction = r.dir[axis]
        if direction == 0:
            # parallel to the slab: inside or out for every t
            if origin < b.min[axis] or origin > b.max[axis]:
                return None
            continue
        t0 = (b.min[axis] - origin) / direction
        t1 = (b.max[axis] - origin) / direction
        if t0 > t1:
            t0, t1 = t1, t0
        t_near = max(t_near, t0)
        t_far = min(t_far, t1)
        if t_near > t_far:
            return None
    if t_far < max(t_near, 0.0):
        return None
    return float(t_near), float(t_far)


def aabb_iou(a: Aabb, b: Aabb) -> float:
    """Intersection over union of two boxes' volumes.

    Disjoint boxes and a zero-volume union give 0.
    """
    overlap = np.clip(
        np.minimum(a.max, b.max) - np.maximum(a.min, b.min), 0, None
    )
    intersection = float(np.prod(overlap))
    union = a.volume + b.volume - intersection
    if union <= 0:
        return 0.0
    return intersection / union


def angle_between(u, v) -> float:
    """Angle between two non-zero vectors in degrees, in [0, 180]."""
    u = np.asarray(u, dtype=float).reshape(3)
    v = np.asarray(v, dtype=float).reshape(3)
    norm_u = np.linalg.norm(u)
    norm_v = np.linalg.norm(v)
    if norm_u == 0 or norm_v == 0:
        raise ValueError("angle_between needs non-zero vectors")
    cosine = np.clip(np.dot(u, v) / (norm_u * norm_v), -1.0, 1.0)
    return float(np.degrees(np.arccos(cosine)))


def crop_cloud_with_bounding_box(pc: PointCloud, box: Aabb) -> np.ndarray:
    """Indices of the cloud points inside the box."""
    return np.flatnonzero(box.contains(pc.points))
