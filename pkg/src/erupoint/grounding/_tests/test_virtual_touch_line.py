import numpy as np
import pytest

from erupoint.errors import NoCandidatesError
from erupoint.geometry.bounding_box_utils import Aabb
from erupoint.grounding.virtual_touch_line import (
    GestureRay,
    order_scores,
    rank_objects,
    vtl_score,
)
from erupoint.placement.scene import SceneObject

# eye at the origin pointing along +y
G = GestureRay.from_landmarks([0, 0, 0], [0, 0.5, 0])


def _at_angle(degrees, distance=3.0, size=0.1):
    angle = np.radians(degrees)
    center = distance * np.array([np.sin(angle), np.cos(angle), 0.0])
    return Aabb.from_center_size(center, [size] * 3)


def test_on_ray_scores_one():
    assert vtl_score(G, _at_angle(0)) == 1.0


def test_angular_falloff_without_hit():
    assert vtl_score(G, _at_angle(15)) == pytest.approx(0.5)
    assert vtl_score(G, _at_angle(6)) == pytest.approx(0.8)
    assert vtl_score(G, _at_angle(30)) == pytest.approx(0.0, abs=1e-12)
    assert vtl_score(G, _at_angle(60)) == 0.0


def test_hit_bonus():
    # a wide box whose center is 20 degrees off but which the ray crosses
    box = Aabb(min=[-0.2, 2.5, -0.5], max=[2.0, 3.5, 0.5])
    angle = np.degrees(np.arctan2(0.9, 3.0))
    expected = 1 - angle / 30 + 0.5
    assert vtl_score(G, box) == pytest.approx(expected)


def test_behind_scores_zero():
    assert vtl_score(G, _at_angle(180)) == 0.0
    assert vtl_score(G, _at_angle(120)) == 0.0


def test_box_centered_on_eye():
    assert vtl_score(G, Aabb.from_center_size([0, 0, 0], [1, 1, 1])) == 1.0


def test_score_range():
    rng = np.random.default_rng(0)
    for _ in range(200):
        center = rng.uniform(-5, 5, size=3)
        box = Aabb.from_center_size(center, rng.uniform(0.05, 2, size=3))
        assert 0.0 <= vtl_score(G, box) <= 1.0


def test_coinciding_landmarks():
    with pytest.raises(ValueError):
        GestureRay.from_landmarks([1, 1, 1], [1, 1, 1])


def test_order_scores_breaks_ties_by_id():
    scores = [(3, 0.5), (1, 0.5 + 1e-14), (2, 0.7), (0, 0.1)]
    assert [i for i, _ in order_scores(scores)] == [2, 1, 3, 0]


def test_rank_objects():
    objects = [
        SceneObject(5, "chair", _at_angle(20)),
        SceneObject(2, "chair", _at_angle(-20)),
        SceneObject(7, "lamp", _at_angle(0)),
        SceneObject(1, "sofa", _at_angle(170)),
    ]
    ranking = rank_objects(G, objects)
    assert [i for i, _ in ranking] == [7, 2, 5, 1]
    assert ranking[1][1] == pytest.approx(ranking[2][1])


def test_rank_objects_without_candidates():
    with pytest.raises(NoCandidatesError):
        rank_objects(G, [])
