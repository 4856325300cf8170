"""Independent re-checks of emitted placements.

These checks share no geometry code with the placement sampler: occlusion
and pointing are tested by marching points along segments, the footprint
by testing a dense set of points on the agent's cylinder.
"""
import logging
from typing import List, Optional

import numpy as np

from erupoint import constants
from erupoint.body.pool import AgentPool
from erupoint.config import Config
from erupoint.placement.placement import Placement
from erupoint.placement.scene import Scene, SceneObject

logger = logging.getLogger(__name__)

# samples along each marched segment
_MARCH_STEPS = 10_000

# slack around the target box when marching the gesture ray (meters)
_HIT_SLACK = 0.005


def _inside(points: np.ndarray, box_min, box_max) -> np.ndarray:
    return np.all((points >= box_min) & (points <= box_max), axis=-1)


def _world_matrix(placement: Placement) -> np.ndarray:
    yaw = np.radians(placement.yaw)
    matrix = np.eye(4)
    matrix[:2, :2] = [[np.cos(yaw), -np.sin(yaw)], [np.sin(yaw), np.cos(yaw)]]
    matrix[:3, 3] = placement.position
    return matrix


def _cylinder_points(position, radius: float, height: float) -> np.ndarray:
    rings = np.linspace(0.0, radius, 16, endpoint=False)
    angles = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
    heights = np.arange(0.0, height + 1e-9, 0.05)
    r, a, h = np.meshgrid(rings, angles, heights, indexing="ij")
    offsets = np.stack([r * np.cos(a), r * np.sin(a), h], axis=-1)
    return offsets.reshape(-1, 3) + np.asarray(position)


def verify_placement(
    scene: Scene,
    target: SceneObject,
    placement: Placement,
    pool: AgentPool,
    config: Optional[Config] = None,
) -> List[str]:
    """Re-validate a placement; returns the failed checks (empty if valid).

    Checks: "bounds", "floor", "distance", "footprint", "line_of_sight",
    "gesture_miss" and "pointing_angle".
    """
    config = Config() if config is None else config
    failures = []
    position = placement.position
    center = (target.box.min + target.box.max) / 2

    points = scene.cloud.points
    low = np.min([points.min(axis=0)] + [o.box.min for o in scene.objects], 0)
    high = np.max([points.max(axis=0)] + [o.box.max for o in scene.objects], 0)
    if np.any(position[:2] < low[:2]) or np.any(position[:2] > high[:2]):
        failures.append("bounds")
    if not np.isclose(position[2], scene.floor_z):
        failures.append("floor")

    distance = np.hypot(*(position[:2] - center[:2]))
    tolerance = 1e-9
    if not (
        config.distance_min - tolerance
        <= distance
        <= config.distance_max + tolerance
    ):
        failures.append("distance")

    profile_id = pool.entry(placement.agent_index)[0]
    height = pool.skeleton(profile_id).height
    cylinder = _cylinder_points(position, config.footprint_radius, height)
    if any(
        np.any(_inside(cylinder, o.box.min, o.box.max)) for o in scene.objects
    ):
        failures.append("footprint")

    matrix = _world_matrix(placement)
    eye, fingertip = pool.landmarks(placement.agent_index)
    eye = matrix[:3, :3] @ eye + matrix[:3, 3]
    fingertip = matrix[:3, :3] @ fingertip + matrix[:3, 3]

    # sight line: march toward the center and stop where the target starts
    fractions = np.linspace(0.0, 1.0, _MARCH_STEPS)
    sight = eye + np.outer(fractions, center - eye)
    in_target = _inside(sight, target.box.min, target.box.max)
    entry = int(np.argmax(in_target))
    before_target = sight[:entry]
    for obstacle in scene.objects:
        if obstacle.object_id == target.object_id:
            continue
        if np.any(_inside(before_target, obstacle.box.min, obstacle.box.max)):
            failures.append("line_of_sight")
            break

    direction = fingertip - eye
    direction = direction / np.linalg.norm(direction)
    reach = 2 * np.linalg.norm(center - eye) + np.linalg.norm(
        target.box.max - target.box.min
    )
    gesture = eye + np.outer(fractions * reach, direction)
    if not np.any(
        _inside(
            gesture, target.box.min - _HIT_SLACK, target.box.max + _HIT_SLACK
        )
    ):
        failures.append("gesture_miss")

    to_center = (center - eye) / np.linalg.norm(center - eye)
    angle = np.degrees(np.arccos(np.clip(direction @ to_center, -1, 1)))
    if angle > constants.MAX_POINTING_ERROR + 1e-9:
        failures.append("pointing_angle")

    if failures:
        logger.warning(
            "placement of agent %d at %s failed: %s",
            placement.agent_index,
            np.round(position, 3).tolist(),
            ", ".join(failures),
        )
    return failures
