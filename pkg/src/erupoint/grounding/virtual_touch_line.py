from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from erupoint.body.pose import PosedAgent
from erupoint.errors import NoCandidatesError
from erupoint.geometry.bounding_box_utils import (
    Aabb,
    Ray,
    angle_between,
    ray_aabb_intersect,
)
from erupoint.placement.scene import SceneObject

# angle from the ray beyond which an object gets no angular score (degrees)
ANGLE_CUTOFF = 30.0

# bonus for boxes the ray passes through
HIT_BONUS = 0.5

# scores closer than this are tied
SCORE_DECIMALS = 12


@dataclass(frozen=True)
class GestureRay:
    """The virtual touch line: from the eye through the fingertip."""

    ray: Ray

    @classmethod
    def from_landmarks(cls, eye, fingertip) -> "GestureRay":
        if np.allclose(eye, fingertip):
            raise ValueError("eye and fingertip coincide")
        return cls(ray=Ray.through(eye, fingertip))

    @property
    def origin(self) -> np.ndarray:
        return self.ray.origin

    @property
    def dir(self) -> np.ndarray:
        return self.ray.dir


def gesture_ray(agent: PosedAgent) -> GestureRay:
    """The ray from the agent's eye through its fingertip.

    Raises
    ------
    ValueError
        When the eye and the fingertip coincide.
    """
    return GestureRay.from_landmarks(agent.eye, agent.fingertip)


def vtl_score(g: GestureRay, box: Aabb) -> float:
    """Score in [0, 1] of how well the gesture singles out a box.

    The angular part falls linearly from 1 on the ray to 0 at
    ANGLE_CUTOFF degrees; boxes the ray passes through get HIT_BONUS on
    top. Boxes whose center lies behind the eye score 0.

    Parameters
    ----------
    g : GestureRay
        The virtual touch line.
    box : Aabb
        The candidate box.

    Returns
    -------
    score : float
        1 when the box center is the ray origin.
    """
    to_center = box.center - g.origin
    if not np.any(to_center):
        return 1.0
    if np.dot(to_center, g.dir) < 0:
        return 0.0
    theta = angle_between(g.dir, to_center)
    score = max(0.0, 1.0 - theta / ANGLE_CUTOFF)
    if ray_aabb_intersect(g.ray, box) is not None:
        score += HIT_BONUS
    return min(score, 1.0)


def order_scores(
    scores: Sequence[Tuple[int, float]],
) -> List[Tuple[int, float]]:
    """Sort (object_id, score) pairs by descending score, ties by id."""
    return sorted(
        scores, key=lambda item: (-round(item[1], SCORE_DECIMALS), item[0])
    )


def rank_objects(
    g: GestureRay, objects: Sequence[SceneObject]
) -> List[Tuple[int, float]]:
    """Rank objects by their virtual touch line score.

    Parameters
    ----------
    g : GestureRay
        The virtual touch line.
    objects : sequence of SceneObject
        Candidates; must not be empty.

    Returns
    -------
    ranking : list of (int, float)
        (object_id, score) pairs, best first. Scores equal to 12 decimals
        are ordered by ascending object id.

    Raises
    ------
    NoCandidatesError
        When `objects` is empty.
    """
    if len(objects) == 0:
        raise NoCandidatesError("no objects to rank")
    return order_scores([(o.object_id, vtl_score(g, o.box)) for o in objects])
