import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from erupoint import constants
from erupoint.body.pool import AgentPool
from erupoint.body.pose import Side, solve_elevation
from erupoint.config import Config
from erupoint.errors import PlacementInfeasibleError, PointingInfeasibleError
from erupoint.geometry.bounding_box_utils import (
    Ray,
    angle_between,
    ray_aabb_intersect,
)
from erupoint.geometry.point_cloud import as_point
from erupoint.geometry.transforms import RigidTransform
from erupoint.placement.scene import Scene, SceneObject

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Placement:
    """Where an agent stands in a scene.

    position is the ground projection of the pelvis (z = floor height),
    yaw the rotation about +z in degrees that turns the body's forward
    axis (+y) toward the target, and agent_index the pool index of the
    posed agent.
    """

    position: np.ndarray
    yaw: float
    agent_index: int

    def __post_init__(self):
        object.__setattr__(self, "position", as_point(self.position))
        if not 0 <= self.yaw < 360:
            raise ValueError(f"yaw must lie in [0, 360), got {self.yaw}")
        if self.agent_index < 0:
            raise ValueError("agent_index must be non-negative")
        object.__setattr__(self, "yaw", float(self.yaw))
        object.__setattr__(self, "agent_index", int(self.agent_index))

    @property
    def transform(self) -> RigidTransform:
        """Body frame -> world frame."""
        return RigidTransform.about_z(self.yaw, translation=self.position)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "position": self.position.tolist(),
            "yaw": self.yaw,
            "agent_index": self.agent_index,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Placement":
        return cls(
            position=data["position"],
            yaw=data["yaw"],
            agent_index=data["agent_index"],
        )


@dataclass
class PlacementResult:
    """Placements found for one target with the sampling diagnostics.

    saturated is set when fewer placements than requested were found
    within the attempt budget.
    """

    placements: List[Placement]
    requested: int
    attempts: int
    reasons: Dict[str, int] = field(default_factory=dict)

    @property
    def saturated(self) -> bool:
        return len(self.placements) < self.requested

    def __len__(self) -> int:
        return len(self.placements)

    def __iter__(self):
        return iter(self.placements)


def facing_yaw(position, target) -> float:
    """Yaw in [0, 360) that turns +y at `position` toward `target`."""
    delta = as_point(target) - as_point(position)
    yaw = math.degrees(math.atan2(-delta[0], delta[1])) % 360.0
    # -0.0 % 360 and rounding can land on 360
    return 0.0 if yaw >= 360.0 else yaw


def footprint_clear(
    position,
    radius: float,
    height: float,
    obstacles: Sequence[SceneObject],
) -> bool:
    """Whether a vertical cylinder standing at `position` misses every box.

    The cylinder spans from the floor at position z up to `height`; boxes
    entirely above or below it are ignored.
    """
    position = as_point(position)
    for obstacle in obstacles:
        box = obstacle.box
        if box.min[2] > position[2] + height or box.max[2] < position[2]:
            continue
        gap = np.maximum(
            np.maximum(box.min[:2] - position[:2], position[:2] - box.max[:2]),
            0.0,
        )
        if np.linalg.norm(gap) < radius:
            return False
    return True


def line_of_sight_clear(
    eye, target: SceneObject, obstacles: Sequence[SceneObject]
) -> bool:
    """Whether no obstacle box blocks the view from `eye` to the target.

    The sight line runs from the eye toward the target box center and ends
    where it enters the target box; an obstacle blocks when the line meets
    it before that point. Grazing an obstacle counts as blocked.
    """
    if any(o.object_id == target.object_id for o in obstacles):
        raise ValueError("the target must not be one of the obstacles")
    eye = as_point(eye)
    if target.box.contains(eye)[0]:
        return True
    sight = Ray.through(eye, target.box.center)
    t_target = max(ray_aabb_intersect(sight, target.box)[0], 0.0)
    for obstacle in obstacles:
        interval = ray_aabb_intersect(sight, obstacle.box)
        if interval is not None and max(interval[0], 0.0) < t_target:
            return False
    return True


def agent_world_landmarks(
    pool: AgentPool, index: int, transform: RigidTransform
):
    """World-frame (eye, fingertip) of a pool agent."""
    eye, fingertip = pool.landmarks(index)
    return transform.apply(eye), transform.apply(fingertip)


def solve_pointing(
    eye,
    placement_yaw: float,
    target: SceneObject,
    pool: AgentPool,
    seed: int,
    profile_id: Optional[int] = None,
    fluctuation: float = constants.FLUCTUATION,
    retries: int = constants.POINTING_RETRIES,
    max_error: float = constants.MAX_POINTING_ERROR,
) -> int:
    """Choose the pool agent whose gesture ray passes through the target.

    The exact arm elevation that makes an unperturbed virtual touch line
    pass through the target center is solved in the body's sagittal
    plane; a uniform fluctuation of at most `fluctuation` degrees is added
    and snapped to the pool's elevation grid. Each candidate agent is
    checked with its own (perturbed) landmarks: its ray must intersect the
    target box and deviate from the eye -> center direction by at most
    `max_error` degrees.

    Parameters
    ----------
    eye : array-like
        World position of the agent's rest eye. The agent is placed so
        that its rest eye lies here.
    placement_yaw : float
        Body yaw in degrees.
    target : SceneObject
        The referred object.
    pool : AgentPool
        Agents to choose from.
    seed : int
        Seed of the profile, side and fluctuation draws.
    profile_id : int, optional
        Profile to use; drawn uniformly from the pool when omitted.
    fluctuation : float
        Half width in degrees of the uniform elevation fluctuation.
    retries : int
        Number of fluctuation draws to try.
    max_error : float
        Largest accepted angle in degrees between the gesture ray and the
        eye -> center direction.

    Returns
    -------
    index : int
        Pool index of the chosen agent.

    Raises
    ------
    PointingInfeasibleError
        When no draw within `retries` yields a ray through the target.
    """
    rng = np.random.default_rng(seed)
    eye = as_point(eye)
    center = target.box.center
    if np.allclose(eye, center):
        raise ValueError("the target center coincides with the eye")

    if profile_id is None:
        profile_id = int(rng.choice(pool.profile_ids))
    skeleton = pool.skeleton(profile_id)
    rest_eye = skeleton.joints["eye"]
    rotation = RigidTransform.about_z(placement_yaw)
    transform = RigidTransform(
        rotation=rotation.rotation,
        translation=eye - rotation.apply(rest_eye),
    )

    # both arms point along the sagittal plane, so the side is a free draw
    side = Side.parse(int(rng.integers(len(constants.SIDES))))
    local = transform.inverse().apply(center) - rest_eye
    ray_elevation = math.degrees(
        math.atan2(local[2], math.hypot(local[0], local[1]))
    )
    elevation = solve_elevation(skeleton, ray_elevation)

    for attempt in range(retries):
        delta = rng.uniform(-fluctuation, fluctuation) if fluctuation else 0.0
        index = pool.index(
            profile_id, side, pool.grid.snap(elevation + delta)
        )
        agent_eye, fingertip = agent_world_landmarks(pool, index, transform)
        gesture = Ray.through(agent_eye, fingertip)
        if ray_aabb_intersect(gesture, target.box) is None:
            continue
        if angle_between(gesture.dir, center - agent_eye) > max_error:
            continue
        logger.debug(
            "object %d: pointing solved after %d attempts",
            target.object_id,
            attempt + 1,
        )
        return index

    raise PointingInfeasibleError(
        f"no grid elevation points at object {target.object_id}",
        attempts=retries,
    )


def sample_placements(
    scene: Scene,
    target: SceneObject,
    pool: AgentPool,
    seed: int,
    config: Optional[Config] = None,
) -> PlacementResult:
    """Rejection-sample 3 to 5 agent placements pointing at `target`.

    Candidate positions are drawn uniformly on the annulus of the distance
    band around the target center and clipped to the scene bounds. A
    candidate is kept when it is in the distance band, far enough from the
    placements already kept, its footprint misses every object, the target
    is in sight and a pool agent points through the target.

    Raises
    ------
    PlacementInfeasibleError
        When no placement is found within the attempt budget.
    """
    config = Config() if config is None else config
    if all(o.object_id != target.object_id for o in scene.objects):
        raise ValueError(
            f"object {target.object_id} is not in scene {scene.scene_id}"
        )
    if len(pool) == 0:
        raise ValueError("the agent pool is empty")

    rng = np.random.default_rng(seed)
    requested = int(rng.integers(3, 6))
    distance_min, distance_max = config.distance_band
    center = target.box.center
    bounds = scene.bounds
    obstacles = scene.others(target)
    reasons: Counter = Counter()
    placements: List[Placement] = []

    attempts = 0
    while len(placements) < requested and attempts < config.max_attempts:
        attempts += 1
        radius = math.sqrt(rng.uniform(distance_min**2, distance_max**2))
        angle = rng.uniform(0.0, 2 * math.pi)
        profile_id = int(rng.choice(pool.profile_ids))
        pointing_seed = int(rng.integers(2**32))

        position = np.array(
            [
                center[0] + radius * math.cos(angle),
                center[1] + radius * math.sin(angle),
                scene.floor_z,
            ]
        )
        position[:2] = np.clip(position[:2], bounds.min[:2], bounds.max[:2])

        distance = np.linalg.norm(position[:2] - center[:2])
        if not distance_min <= distance <= distance_max:
            reasons["distance"] += 1
            continue
        if any(
            np.linalg.norm(position[:2] - p.position[:2]) < config.min_spacing
            for p in placements
        ):
            reasons["spacing"] += 1
            continue
        skeleton = pool.skeleton(profile_id)
        if not footprint_clear(
            position, config.footprint_radius, skeleton.height, scene.objects
        ):
            reasons["footprint"] += 1
            continue

        yaw = facing_yaw(position, center)
        transform = RigidTransform.about_z(yaw, translation=position)
        rest_eye = transform.apply(skeleton.joints["eye"])
        if not line_of_sight_clear(rest_eye, target, obstacles):
            reasons["line_of_sight"] += 1
            continue

        try:
            index = solve_pointing(
                rest_eye,
                yaw,
                target,
                pool,
                seed=pointing_seed,
                profile_id=profile_id,
                fluctuation=config.fluctuation_deg,
                retries=config.pointing_retries,
            )
        except PointingInfeasibleError:
            reasons["pointing"] += 1
            continue

        # the chosen agent's perturbed eye must see the target too
        agent_eye, _ = agent_world_landmarks(pool, index, transform)
        if not line_of_sight_clear(agent_eye, target, obstacles):
            reasons["line_of_sight"] += 1
            continue

        placements.append(
            Placement(position=position, yaw=yaw, agent_index=index)
        )

    if not placements:
        raise PlacementInfeasibleError(
            f"no placement for object {target.object_id} "
            f"in scene {scene.scene_id}",
            attempts=attempts,
            reasons=reasons,
        )
    result = PlacementResult(
        placements=placements,
        requested=requested,
        attempts=attempts,
        reasons=dict(reasons),
    )
    if result.saturated:
        logger.warning(
            "scene %s object %d saturated: %d of %d placements (%s)",
            scene.scene_id,
            target.object_id,
            len(placements),
            requested,
            dict(reasons),
        )
    return result
