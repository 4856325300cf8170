import numpy as np
import pytest

from erupoint.data.data_set import EruSample
from erupoint.data.micro_scenes import make_room_scene
from erupoint.errors import DuplicatePredictionError
from erupoint.evaluation.metrics import classify_sample, evaluate
from erupoint.geometry.bounding_box_utils import Aabb
from erupoint.grounding.baselines import GroundingPrediction
from erupoint.placement.placement import Placement

GREY = (0.5, 0.5, 0.5)
UNIT = Aabb(min=[0, 0, 0], max=[1, 1, 1])


@pytest.fixture(scope="module")
def scenes():
    kitchen = make_room_scene(
        "kitchen",
        [
            ("chair", Aabb(min=[1, 1, 0], max=[1.5, 1.5, 0.9]), GREY, ()),
            ("Chair", Aabb(min=[3, 1, 0], max=[3.5, 1.5, 0.9]), GREY, ()),
            ("table", Aabb(min=[1, 3, 0], max=[2, 4, 0.7]), GREY, ()),
        ],
    )
    lounge = make_room_scene(
        "lounge",
        [
            ("lamp", Aabb(min=[1, 1, 0], max=[1.3, 1.3, 1.5]), GREY, ()),
            ("sofa", Aabb(min=[2, 2, 0], max=[4, 3, 0.8]), GREY, ()),
            ("sofa", Aabb(min=[2, 4, 0], max=[4, 5, 0.8]), GREY, ()),
        ],
    )
    return {"kitchen": kitchen, "lounge": lounge}


def _sample(sample_id, scene_id, object_id):
    return EruSample(
        sample_id=sample_id,
        scene_id=scene_id,
        object_id=object_id,
        description="it",
        placement=Placement(position=[0, 0, 0], yaw=0, agent_index=0),
    )


# sample id, scene, target, predicted object
CASES = [
    ("s0", "kitchen", 0, 0),
    ("s1", "kitchen", 0, 1),
    ("s2", "kitchen", 1, 1),
    ("s3", "kitchen", 1, 0),
    ("s4", "kitchen", 2, 2),
    ("s5", "kitchen", 2, 0),
    ("s6", "lounge", 0, 0),
    ("s7", "lounge", 1, 2),
    ("s8", "lounge", 2, 1),
    ("s9", "lounge", 0, 0),
]


@pytest.fixture(scope="module")
def samples():
    return [_sample(i, scene, target) for i, scene, target, _ in CASES]


@pytest.fixture(scope="module")
def predictions(scenes):
    return [
        GroundingPrediction(
            object_id=predicted,
            box=scenes[scene].get_object(predicted).box,
            confidence=0.5,
            mode="full",
            sample_id=i,
        )
        for i, scene, _, predicted in CASES
    ]


def test_classify_sample(scenes):
    kitchen = scenes["kitchen"]
    # labels are compared case-insensitively
    assert classify_sample(kitchen, kitchen.get_object(0)) == "multiple"
    assert classify_sample(kitchen, kitchen.get_object(1)) == "multiple"
    assert classify_sample(kitchen, kitchen.get_object(2)) == "unique"


def test_evaluate(predictions, samples, scenes):
    report = evaluate(predictions, samples, scenes)
    assert report.counts == {"unique": 4, "multiple": 6, "overall": 10}
    assert report.accuracy["unique"][0.25] == pytest.approx(3 / 4)
    assert report.accuracy["multiple"][0.25] == pytest.approx(2 / 6)
    assert report.accuracy["overall"][0.25] == 0.5
    assert report.accuracy["overall"][0.5] == 0.5
    assert report.missing == []

    weighted = (
        report.accuracy["unique"][0.25] * 4
        + report.accuracy["multiple"][0.25] * 6
    ) / 10
    assert abs(report.accuracy["overall"][0.25] - weighted) <= 1e-12

    as_dict = report.to_dict()
    assert as_dict["accuracy"]["overall"]["0.25"] == 0.5
    assert as_dict["counts"]["overall"] == 10


def test_evaluate_is_order_invariant(predictions, samples, scenes):
    expected = evaluate(predictions, samples, scenes).to_dict()
    shuffled = [predictions[i] for i in np.random.default_rng(0).permutation(10)]
    assert evaluate(shuffled, samples, scenes).to_dict() == expected


def test_threshold_is_inclusive():
    scene = make_room_scene("box", [("crate", UNIT, GREY, ())])
    sample = _sample("a", "box", 0)
    quarter = Aabb(min=[0, 0, 0], max=[1, 1, 0.25])
    prediction = GroundingPrediction(0, quarter, 1.0, "full", sample_id="a")
    report = evaluate([prediction], [sample], {"box": scene})
    assert report.accuracy["overall"][0.25] == 1.0
    assert report.accuracy["overall"][0.5] == 0.0


def test_duplicate_predictions(predictions, samples, scenes):
    with pytest.raises(DuplicatePredictionError):
        evaluate(predictions + [predictions[3]], samples, scenes)


def test_unknown_sample(predictions, samples, scenes):
    with pytest.raises(ValueError):
        evaluate(predictions, samples[:5], scenes)


def test_missing_predictions_count_as_wrong(predictions, samples, scenes, caplog):
    report = evaluate(predictions[:5], samples, scenes)
    assert report.missing == ["s5", "s6", "s7", "s8", "s9"]
    assert report.counts["overall"] == 10
    # s0, s2 and s4 are correct
    assert report.accuracy["overall"][0.25] == pytest.approx(0.3)
    assert "no prediction" in caplog.text


def test_custom_thresholds(predictions, samples, scenes):
    report = evaluate(predictions, samples, scenes, thresholds=(0.1, 0.9))
    assert set(report.accuracy["overall"]) == {0.1, 0.9}


def test_empty_subset(scenes):
    kitchen = scenes["kitchen"]
    sample = _sample("a", "kitchen", 2)
    prediction = GroundingPrediction(
        2, kitchen.get_object(2).box, 1.0, "lang", sample_id="a"
    )
    report = evaluate([prediction], [sample], scenes)
    assert report.counts["multiple"] == 0
    assert report.accuracy["multiple"][0.25] == 0.0
    assert report.accuracy["unique"][0.25] == 1.0
