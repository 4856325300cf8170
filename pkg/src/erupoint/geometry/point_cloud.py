from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

# tolerance on unit normals
NORMAL_TOLERANCE = 1e-6


def as_point(value) -> np.ndarray:
    """Coerce a 3-sequence to a finite float64 point."""
    point = np.asarray(value, dtype=float).reshape(3)
    if not np.all(np.isfinite(point)):
        raise ValueError(f"point components must be finite, got {point}")
    return point


@dataclass(frozen=True)
class PointCloud:
    """An ordered set of 3D points with optional per-point features.

    points : (n, 3) array of positions in meters, z-up.
    colors : optional (n, 3) array of RGB values in [0, 1].
    normals : optional (n, 3) array of unit normals. All-zero rows are
        allowed for padding points.
    """

    points: np.ndarray
    colors: Optional[np.ndarray] = None
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(points)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", points)

        if self.colors is not None:
            colors = np.asarray(self.colors, dtype=float).reshape(-1, 3)
            if len(colors) != len(points):
                raise ValueError("colors must have one entry per point")
            if np.any(colors < 0) or np.any(colors > 1):
                raise ValueError("colors must lie in [0, 1]")
            object.__setattr__(self, "colors", colors)

        if self.normals is not None:
            normals = np.asarray(self.normals, dtype=float).reshape(-1, 3)
            if len(normals) != len(points):
                raise ValueError("normals must have one entry per point")
            lengths = np.linalg.norm(normals, axis=1)
            valid = (np.abs(lengths - 1) <= NORMAL_TOLERANCE) | (lengths == 0)
            if not np.all(valid):
                raise ValueError("normals must be unit length or all zero")
            object.__setattr__(self, "normals", normals)

    def __len__(self) -> int:
        return len(self.points)

    def select(self, indices: np.ndarray) -> "PointCloud":
        """Return the sub-cloud at the given indices, in the given order."""
        return PointCloud(
            points=self.points[indices],
            colors=None if self.colors is None else self.colors[indices],
            normals=None if self.normals is None else self.normals[indices],
        )

    def with_points(self, points: np.ndarray) -> "PointCloud":
        return PointCloud(points=points, colors=self.colors, normals=self.normals)


def concatenate(clouds: Sequence[PointCloud]) -> PointCloud:
    """Concatenate clouds in order.

    A feature is kept only when every cloud carries it.
    """
    if len(clouds) == 0:
        raise ValueError("need at least one cloud to concatenate")
    points = np.concatenate([c.points for c in clouds])
    colors = None
    if all(c.colors is not None for c in clouds):
        colors = np.concatenate([c.colors for c in clouds])
    normals = None
    if all(c.normals is not None for c in clouds):
        normals = np.concatenate([c.normals for c in clouds])
    return PointCloud(points=points, colors=colors, normals=normals)


def voxel_keys(points: np.ndarray, voxel_size: float) -> np.ndarray:
    """Integer voxel coordinates of each point."""
    return np.floor(points / voxel_size).astype(np.int64)


def voxel_downsample(pc: PointCloud, voxel_size: float) -> PointCloud:
    """Replace the points in each occupied voxel by their centroid.

    Colors are averaged; normals are averaged and renormalized, falling back
    to zero when the average vanishes. Output points are ordered by
    ascending voxel key (lexicographic on x, y, z).

    Parameters
    ----------
    pc : PointCloud
        The cloud to downsample. Must be non-empty.
    voxel_size : float
        Edge length of the cubic voxels in meters.

    Returns
    -------
    downsampled : PointCloud
        One point per occupied voxel.
    """
    if voxel_size <= 0:
        raise ValueError(f"voxel_size must be positive, got {voxel_size}")
    if len(pc) == 0:
        raise ValueError("cannot downsample an empty cloud")

    keys = voxel_keys(pc.points, voxel_size)
    # pack (x, y, z) keys into one integer; the packed order is the
    # lexicographic key order
    keys = keys - keys.min(axis=0)
    extent = keys.max(axis=0) + 1
    packed = (keys[:, 0] * extent[1] + keys[:, 1]) * extent[2] + keys[:, 2]
    _, inverse, counts = np.unique(
        packed, return_inverse=True, return_counts=True
    )
    inverse = inverse.reshape(-1)
    n_voxels = len(counts)

    def _mean(values: np.ndarray) -> np.ndarray:
        sums = np.zeros((n_voxels, values.shape[1]))
        np.add.at(sums, inverse, values)
        return sums / counts[:, None]

    points = _mean(pc.points)
    colors = None if pc.colors is None else np.clip(_mean(pc.colors), 0, 1)
    normals = None
    if pc.normals is not None:
        normals = _mean(pc.normals)
        lengths = np.linalg.norm(normals, axis=1)
        degenerate = lengths < 1e-12
        normals[~degenerate] /= lengths[~degenerate, None]
        normals[degenerate] = 0.0
    return PointCloud(points=points, colors=colors, normals=normals)


def resample_fixed(pc: PointCloud, n: int, seed: int) -> PointCloud:
    """Resample a cloud to exactly n points.

    Larger clouds are reduced to a uniform random subset drawn without
    replacement (kept in original order); smaller clouds are padded with
    all-zero points carrying all-zero features.
    """
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    n_points = len(pc)
    if n_points == n:
        return pc
    if n_points > n:
        rng = np.random.default_rng(seed)
        indices = np.sort(rng.choice(n_points, size=n, replace=False))
        return pc.select(indices)

    n_pad = n - n_points
    padding = np.zeros((n_pad, 3))
    return PointCloud(
        points=np.concatenate([pc.points, padding]),
        colors=(
            None
            if pc.colors is None
            else np.concatenate([pc.colors, padding])
        ),
        normals=(
            None
            if pc.normals is None
            else np.concatenate([pc.normals, padding])
        ),
    )
