"""Procedural rooms with several identical objects.

Each micro scene is a square room holding k boxes of one label, identical
in size, color and attributes, plus optional distractors of other labels.
Only the pointing gesture can tell the identical objects apart.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from erupoint.body.pool import AgentPool
from erupoint.config import Config
from erupoint.data.data_set import EruSample
from erupoint.errors import PlacementInfeasibleError
from erupoint.geometry.bounding_box_utils import (
    Aabb,
    crop_cloud_with_bounding_box,
)
from erupoint.geometry.point_cloud import PointCloud
from erupoint.placement.placement import sample_placements
from erupoint.placement.scene import Scene, SceneObject
from erupoint.utils import derive_seed

logger = logging.getLogger(__name__)

IDENTICAL_LABEL = "chair"
IDENTICAL_SIZE = (0.5, 0.5, 0.9)
IDENTICAL_COLOR = (0.55, 0.3, 0.12)

# label, size, color, attributes
ObjectSpec = Tuple[str, Tuple[float, ...], Tuple[float, ...], Tuple[str, ...]]

DISTRACTORS: Tuple[ObjectSpec, ...] = (
    ("table", (1.2, 0.8, 0.75), (0.4, 0.25, 0.1), ("brown",)),
    ("sofa", (1.8, 0.9, 0.8), (0.3, 0.3, 0.6), ("blue", "large")),
    ("cabinet", (0.6, 0.5, 1.2), (0.9, 0.9, 0.9), ("white", "tall")),
    ("lamp", (0.3, 0.3, 1.5), (0.9, 0.8, 0.2), ("yellow", "round")),
)

FLOOR_COLOR = (0.5, 0.5, 0.5)

# minimum horizontal gap between furniture boxes (meters)
_MIN_GAP = 0.8
_MARGIN = 0.5


@dataclass
class MicroBenchmark:
    scenes: Dict[str, Scene]
    samples: List[EruSample]
    # identical object count of each scene
    k_of_scene: Dict[str, int]


def box_surface_points(box: Aabb, spacing: float) -> np.ndarray:
    """Grid points on the top and the four side faces of a box."""
    faces = []
    for axis in range(3):
        others = [a for a in range(3) if a != axis]
        u = np.arange(box.min[others[0]], box.max[others[0]] + 1e-9, spacing)
        v = np.arange(box.min[others[1]], box.max[others[1]] + 1e-9, spacing)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        sides = (box.max[axis],) if axis == 2 else (box.min[axis], box.max[axis])
        for value in sides:
            face = np.empty((uu.size, 3))
            face[:, axis] = value
            face[:, others[0]] = uu.ravel()
            face[:, others[1]] = vv.ravel()
            faces.append(face)
    return np.concatenate(faces)


def make_room_scene(
    scene_id: str,
    objects: Sequence[Tuple[str, Aabb, Tuple[float, ...], Tuple[str, ...]]],
    room_size: float = 6.0,
    floor_z: float = 0.0,
    spacing: float = 0.05,
) -> Scene:
    """Build a scene of furniture boxes on a square floor.

    `objects` holds (label, box, color, attributes) per object; object ids
    follow their order.
    """
    floor_axis = np.arange(0.0, room_size + 1e-9, 2 * spacing)
    xx, yy = np.meshgrid(floor_axis, floor_axis, indexing="ij")
    points = [np.stack([xx.ravel(), yy.ravel(), np.full(xx.size, floor_z)], 1)]
    colors = [np.tile(FLOOR_COLOR, (xx.size, 1))]
    for _, box, color, _ in objects:
        surface = box_surface_points(box, spacing)
        points.append(surface)
        colors.append(np.tile(color, (len(surface), 1)))
    cloud = PointCloud(points=np.concatenate(points), colors=np.concatenate(colors))

    scene_objects = [
        SceneObject(
            object_id=object_id,
            label=label,
            box=box,
            point_indices=crop_cloud_with_bounding_box(cloud, box),
            attributes=attributes,
        )
        for object_id, (label, box, _, attributes) in enumerate(objects)
    ]
    return Scene(
        scene_id=scene_id, cloud=cloud, objects=scene_objects, floor_z=floor_z
    )


def generate_micro_scene(
    scene_id: str,
    k: int,
    seed: int,
    n_distractors: int = 0,
    room_size: float = 6.0,
) -> Scene:
    """A room with k identical objects and some distinct distractors.

    The identical objects get randomly permuted ids among all objects.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    rng = np.random.default_rng(seed)
    specs = [
        (IDENTICAL_LABEL, IDENTICAL_SIZE, IDENTICAL_COLOR, ())
        for _ in range(k)
    ]
    for index in rng.choice(len(DISTRACTORS), size=n_distractors):
        specs.append(DISTRACTORS[index])
    specs = [specs[i] for i in rng.permutation(len(specs))]

    boxes: List[Aabb] = []
    for label, size, _, _ in specs:
        for _ in range(1000):
            half = np.asarray(size[:2]) / 2
            center = rng.uniform(_MARGIN + half, room_size - _MARGIN - half)
            box = Aabb(
                min=[*(center - half), 0.0], max=[*(center + half), size[2]]
            )
            if all(_horizontal_gap(box, other) >= _MIN_GAP for other in boxes):
                boxes.append(box)
                break
        else:
            raise RuntimeError(
                f"could not fit {len(specs)} objects in a {room_size} m room"
            )
    objects = [
        (label, box, color, attributes)
        for (label, _, color, attributes), box in zip(specs, boxes)
    ]
    return make_room_scene(scene_id, objects, room_size=room_size)


def generate_micro_benchmark(
    n_scenes: int,
    pool: AgentPool,
    seed: int,
    k_values: Sequence[int] = (2, 3, 4, 5, 6),
    n_distractors: int = 0,
    samples_per_scene: Optional[int] = 1,
    config: Optional[Config] = None,
) -> MicroBenchmark:
    """Micro scenes with agents pointing at one of the identical objects.

    Scene i holds k = k_values[i % len(k_values)] identical objects. The
    target cycles through the identical objects in id order, so within a
    k bucket every id rank is the target equally often. Descriptions name
    only the label.
    """
    scenes = {}
    samples = []
    k_of_scene = {}
    for scene_index in range(n_scenes):
        k = k_values[scene_index % len(k_values)]
        scene_id = f"micro{scene_index:04d}"
        scene = generate_micro_scene(
            scene_id,
            k,
            seed=derive_seed(seed, scene_index, 0),
            n_distractors=n_distractors,
        )
        candidates = sorted(
            (o for o in scene.objects if o.label == IDENTICAL_LABEL),
            key=lambda o: o.object_id,
        )
        target = candidates[(scene_index // len(k_values)) % k]
        try:
            result = sample_placements(
                scene,
                target,
                pool,
                seed=derive_seed(seed, scene_index, 1),
                config=config,
            )
        except PlacementInfeasibleError as e:
            logger.warning("skipping scene %s: %s", scene_id, e)
            continue

        placements = result.placements[:samples_per_scene]
        for position_index, placement in enumerate(placements):
            samples.append(
                EruSample(
                    sample_id=f"{scene_id}_{target.object_id}_{position_index}",
                    scene_id=scene_id,
                    object_id=target.object_id,
                    description=f"the {IDENTICAL_LABEL}",
                    placement=placement,
                )
            )
        scenes[scene_id] = scene
        k_of_scene[scene_id] = k
        if (scene_index + 1) % 50 == 0:
            logger.info("generated %d / %d micro scenes", scene_index + 1, n_scenes)
    return MicroBenchmark(scenes=scenes, samples=samples, k_of_scene=k_of_scene)


def _horizontal_gap(a: Aabb, b: Aabb) -> float:
    gap = np.maximum(np.maximum(a.min[:2] - b.max[:2], b.min[:2] - a.max[:2]), 0)
    return float(np.linalg.norm(gap))
