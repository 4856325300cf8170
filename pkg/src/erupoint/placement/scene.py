import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from erupoint.geometry.bounding_box_utils import (
    Aabb,
    crop_cloud_with_bounding_box,
)
from erupoint.geometry.io import read_point_cloud, write_ply
from erupoint.geometry.point_cloud import PointCloud

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_CLOUD_SUFFIXES = (".ply", ".erupc")


@dataclass(frozen=True)
class SceneObject:
    """An annotated object of a scene.

    attributes are free words describing the object (e.g. "red", "round")
    and descriptions are referring expressions written for it; both are
    optional.
    """

    object_id: int
    label: str
    box: Aabb
    point_indices: np.ndarray = field(
        default_factory=lambda: np.zeros(0, dtype=int)
    )
    attributes: Tuple[str, ...] = ()
    descriptions: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "object_id", int(self.object_id))
        object.__setattr__(
            self,
            "point_indices",
            np.asarray(self.point_indices, dtype=int).reshape(-1),
        )
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "descriptions", tuple(self.descriptions))

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "id": self.object_id,
            "label": self.label,
            "box": self.box.to_dict(),
        }
        if self.attributes:
            data["attributes"] = list(self.attributes)
        if self.descriptions:
            data["descriptions"] = list(self.descriptions)
        return data


@dataclass(frozen=True)
class Scene:
    scene_id: str
    cloud: PointCloud
    objects: List[SceneObject]
    floor_z: float

    def __post_init__(self):
        object.__setattr__(self, "objects", list(self.objects))
        ids = [obj.object_id for obj in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError(f"scene {self.scene_id}: object ids must be unique")
        for obj in self.objects:
            if self.floor_z > obj.box.min[2]:
                raise ValueError(
                    f"scene {self.scene_id}: object {obj.object_id} "
                    "extends below the floor"
                )
            if len(obj.point_indices) and not np.all(
                obj.box.contains(self.cloud.points[obj.point_indices])
            ):
                raise ValueError(
                    f"scene {self.scene_id}: object {obj.object_id} "
                    "does not enclose its points"
                )

    @cached_property
    def bounds(self) -> Aabb:
        """Bounding box of the scene cloud and every object box."""
        corners = [self.cloud.points]
        corners += [np.stack([o.box.min, o.box.max]) for o in self.objects]
        return Aabb.from_points(np.concatenate(corners))

    def get_object(self, object_id: int) -> SceneObject:
        for obj in self.objects:
            if obj.object_id == object_id:
                return obj
        raise KeyError(f"scene {self.scene_id} has no object {object_id}")

    def others(self, target: SceneObject) -> List[SceneObject]:
        """All objects except `target`."""
        return [o for o in self.objects if o.object_id != target.object_id]

    def label_count(self, label: str) -> int:
        """Number of objects sharing a label, compared case-insensitively."""
        label = label.lower()
        return sum(o.label.lower() == label for o in self.objects)

    @classmethod
    def from_paths(
        cls, cloud_path: PathLike, objects_path: PathLike
    ) -> "Scene":
        """Load a scene from a point cloud file and an objects JSON file.

        The JSON holds ``{scene_id, floor_z, objects: [{id, label,
        box: {min, max}}]}``; the point indices of each object are the
        cloud points inside its box.
        """
        cloud = read_point_cloud(cloud_path)
        with open(objects_path, encoding="utf-8") as f:
            data = json.load(f)
        objects = []
        for entry in data["objects"]:
            box = Aabb.from_dict(entry["box"])
            objects.append(
                SceneObject(
                    object_id=entry["id"],
                    label=entry["label"],
                    box=box,
                    point_indices=crop_cloud_with_bounding_box(cloud, box),
                    attributes=entry.get("attributes", ()),
                    descriptions=entry.get("descriptions", ()),
                )
            )
        return cls(
            scene_id=str(data["scene_id"]),
            cloud=cloud,
            objects=objects,
            floor_z=float(data["floor_z"]),
        )

    def save(self, directory: PathLike) -> Tuple[Path, Path]:
        """Write `<scene_id>.ply` and `<scene_id>.json` to a directory."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        cloud_path = directory / f"{self.scene_id}.ply"
        objects_path = directory / f"{self.scene_id}.json"
        write_ply(self.cloud, cloud_path)
        data = {
            "scene_id": self.scene_id,
            "floor_z": self.floor_z,
            "objects": [obj.to_dict() for obj in self.objects],
        }
        with open(objects_path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2)
        return cloud_path, objects_path


def load_scenes(
    directory: PathLike, scene_ids: Optional[Sequence[str]] = None
) -> Dict[str, Scene]:
    """Load every scene of a directory, keyed by scene id.

    Each `<name>.json` objects file is paired with the `<name>.ply` (or
    `<name>.erupc`) cloud next to it.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"scene directory not found: {directory}")

    scenes = {}
    for objects_path in sorted(directory.glob("*.json")):
        if scene_ids is not None and objects_path.stem not in scene_ids:
            continue
        candidates = [
            objects_path.with_suffix(suffix) for suffix in _CLOUD_SUFFIXES
        ]
        cloud_paths = [path for path in candidates if path.exists()]
        if not cloud_paths:
            raise FileNotFoundError(
                f"no point cloud next to {objects_path}"
            )
        scene = Scene.from_paths(cloud_paths[0], objects_path)
        scenes[scene.scene_id] = scene
    logger.info("loaded %d scenes from %s", len(scenes), directory)
    return scenes
