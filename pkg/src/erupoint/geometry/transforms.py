from dataclasses import dataclass

import numpy as np
from trimesh import transformations

from erupoint.geometry.point_cloud import PointCloud, as_point

# tolerance on the orthonormality of rotations
ROTATION_TOLERANCE = 1e-9

X_AXIS = np.array([1.0, 0.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class RigidTransform:
    """A proper rigid motion x -> R x + t."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        if not np.allclose(
            rotation.T @ rotation, np.eye(3), atol=ROTATION_TOLERANCE
        ):
            raise ValueError("rotation must be orthonormal")
        if np.linalg.det(rotation) < 0:
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", as_point(self.translation))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(rotation=np.eye(3), translation=np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "RigidTransform":
        matrix = np.asarray(matrix, dtype=float)
        return cls(rotation=matrix[:3, :3], translation=matrix[:3, 3])

    @classmethod
    def about_axis(cls, angle_deg: float, axis, point=None) -> "RigidTransform":
        """Rotation by `angle_deg` about `axis` through `point`."""
        matrix = transformations.rotation_matrix(
            np.radians(angle_deg), axis, point=point
        )
        return cls.from_matrix(matrix)

    @classmethod
    def about_z(cls, yaw_deg: float, translation=(0.0, 0.0, 0.0)):
        """Yaw about the world z axis followed by a translation."""
        rotation = transformations.rotation_matrix(np.radians(yaw_deg), Z_AXIS)
        return cls(rotation=rotation[:3, :3], translation=translation)

    @property
    def matrix(self) -> np.ndarray:
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        """Compose: (self @ other)(x) = self(other(x))."""
        return RigidTransform(
            rotation=self.rotation @ other.rotation,
            translation=self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        return RigidTransform(
            rotation=self.rotation.T,
            translation=-self.rotation.T @ self.translation,
        )

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform a point or an (n, 3) array of points."""
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation

    def apply_vectors(self, vectors: np.ndarray) -> np.ndarray:
        """Rotate directions; translation does not apply."""
        return np.asarray(vectors, dtype=float) @ self.rotation.T

    def apply_cloud(self, pc: PointCloud) -> PointCloud:
        normals = None if pc.normals is None else self.apply_vectors(pc.normals)
        return PointCloud(
            points=self.apply(pc.points), colors=pc.colors, normals=normals
        )
