import numpy as np
import pytest

from erupoint import constants
from erupoint.data.micro_scenes import make_room_scene
from erupoint.errors import NoCandidatesError
from erupoint.geometry.bounding_box_utils import Aabb
from erupoint.grounding.baselines import (
    MAX_LANG_SCORE,
    GroundingPrediction,
    ground_all_modes,
    ground_full,
    ground_gesture_only,
    ground_lang_only,
    lang_score,
)
from erupoint.grounding.virtual_touch_line import GestureRay
from erupoint.placement.scene import Scene, SceneObject

BROWN = (0.5, 0.3, 0.1)


@pytest.fixture(scope="module")
def scene():
    return make_room_scene(
        "living",
        [
            ("chair", Aabb(min=[1, 4, 0], max=[1.5, 4.5, 0.9]), BROWN, ()),
            ("chair", Aabb(min=[4, 4, 0], max=[4.5, 4.5, 0.9]), BROWN, ()),
            (
                "coffee table",
                Aabb(min=[2.5, 1, 0], max=[3.5, 1.6, 0.45]),
                BROWN,
                ("brown", "wooden"),
            ),
            ("lamp", Aabb(min=[5, 1, 0], max=[5.3, 1.3, 1.5]), BROWN, ("tall",)),
        ],
    )


def _pointing_at(scene, object_id):
    eye = np.array([2.75, 1.0, 1.6])
    center = scene.get_object(object_id).box.center
    return GestureRay.from_landmarks(eye, eye + 0.6 * (center - eye))


def _object(label, attributes=()):
    box = Aabb(min=[0, 0, 0], max=[1, 1, 1])
    return SceneObject(0, label, box, attributes=attributes)


@pytest.mark.parametrize(
    "label, attributes, tokens, expected",
    [
        ("chair", (), ["the", "chair"], 1.0),
        ("chair", ("red",), ["the", "red", "chair"], 1.25),
        ("chair", ("Red", "round"), ["the", "red", "round", "chair"], 1.5),
        ("chair", ("red", "round", "big"), ["big", "red", "round", "chair"], 1.5),
        ("chair", ("red",), ["the", "red", "sofa"], 0.25),
        ("chair", ("wooden",), ["the", "wooden", "chair"], 1.0),
        ("coffee table", (), ["the", "table"], 0.0),
        ("coffee table", (), ["the", "coffee", "table"], 1.0),
    ],
)
def test_lang_score(lexicons, label, attributes, tokens, expected):
    score = lang_score(_object(label, attributes), tokens, lexicons)
    assert score == pytest.approx(expected)
    assert 0 <= score <= MAX_LANG_SCORE


def test_gesture_only_follows_the_pointing(scene):
    for object_id in (0, 1):
        prediction = ground_gesture_only(scene, _pointing_at(scene, object_id))
        assert prediction.object_id == object_id
        assert prediction.mode == constants.MODE_GESTURE
        assert prediction.confidence == 1.0
        assert prediction.box is scene.get_object(object_id).box


def test_lang_only_ties_go_to_lowest_id(scene, lexicons):
    prediction = ground_lang_only(scene, ["the", "chair"], lexicons)
    assert prediction.object_id == 0
    assert prediction.confidence == pytest.approx(1 / MAX_LANG_SCORE)

    prediction = ground_lang_only(
        scene, ["the", "brown", "coffee", "table"], lexicons
    )
    assert prediction.object_id == 2
    assert prediction.confidence == pytest.approx(1.25 / 1.5)


def test_lang_only_requires_tokens(scene, lexicons):
    with pytest.raises(ValueError):
        ground_lang_only(scene, [], lexicons)


def test_full_disambiguates_identical_objects(scene, lexicons):
    tokens = ["the", "chair"]
    for object_id in (0, 1):
        g = _pointing_at(scene, object_id)
        prediction = ground_full(scene, g, tokens, lexicons)
        assert prediction.object_id == object_id
        assert prediction.mode == constants.MODE_FULL


def test_full_without_gesture_weight_is_lang(scene, lexicons):
    g = _pointing_at(scene, 1)
    tokens = ["the", "tall", "lamp"]
    full = ground_full(scene, g, tokens, lexicons, w_g=0.0, w_l=1.0)
    lang = ground_lang_only(scene, tokens, lexicons)
    assert full.object_id == lang.object_id == 3
    assert full.confidence == pytest.approx(lang.confidence)


def test_full_without_lang_weight_is_gesture(scene, lexicons):
    g = _pointing_at(scene, 1)
    full = ground_full(scene, g, ["the", "lamp"], lexicons, w_g=1.0, w_l=0.0)
    gesture = ground_gesture_only(scene, g)
    assert full.object_id == gesture.object_id == 1
    assert full.confidence == pytest.approx(gesture.confidence)


def test_full_is_invariant_to_weight_scale(scene, lexicons):
    g = _pointing_at(scene, 0)
    tokens = ["the", "brown", "table"]
    small = ground_full(scene, g, tokens, lexicons, w_g=0.3, w_l=0.7)
    large = ground_full(scene, g, tokens, lexicons, w_g=3.0, w_l=7.0)
    assert small.object_id == large.object_id
    assert small.confidence == pytest.approx(large.confidence)


@pytest.mark.parametrize("w_g, w_l", [(-0.1, 1.0), (0.0, 0.0), (1.0, -1.0)])
def test_full_rejects_weights(scene, lexicons, w_g, w_l):
    with pytest.raises(ValueError):
        ground_full(scene, _pointing_at(scene, 0), ["chair"], lexicons, w_g, w_l)


def test_no_candidates(scene, lexicons):
    empty = Scene("empty", scene.cloud, [], floor_z=0.0)
    g = _pointing_at(scene, 0)
    with pytest.raises(NoCandidatesError):
        ground_gesture_only(empty, g)
    with pytest.raises(NoCandidatesError):
        ground_lang_only(empty, ["chair"], lexicons)
    with pytest.raises(NoCandidatesError):
        ground_full(empty, g, ["chair"], lexicons)


def test_all_modes(scene, lexicons):
    predictions = ground_all_modes(
        scene, _pointing_at(scene, 1), ["the", "chair"], lexicons
    )
    assert [p.mode for p in predictions] == ["gesture", "lang", "full"]
    assert [p.object_id for p in predictions] == [1, 0, 1]


def test_prediction_validation():
    box = Aabb(min=[0, 0, 0], max=[1, 1, 1])
    with pytest.raises(ValueError):
        GroundingPrediction(0, box, 0.5, mode="telepathy")
    with pytest.raises(ValueError):
        GroundingPrediction(0, box, 1.5, mode="lang")

    prediction = GroundingPrediction(4, box, 0.25, mode="full", sample_id="s")
    loaded = GroundingPrediction.from_dict(prediction.to_dict())
    assert loaded.object_id == 4
    assert loaded.sample_id == "s"
    np.testing.assert_array_equal(loaded.box.max, box.max)
