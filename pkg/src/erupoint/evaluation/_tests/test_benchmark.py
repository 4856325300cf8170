import numpy as np
import pytest

from erupoint.data.micro_scenes import generate_micro_benchmark, make_room_scene
from erupoint.evaluation.benchmark import (
    benchmark_table,
    summarize_benchmark,
    target_isolated,
)
from erupoint.geometry.bounding_box_utils import Aabb
from erupoint.grounding.virtual_touch_line import GestureRay

GREY = (0.5, 0.5, 0.5)


def test_target_isolated():
    scene = make_room_scene(
        "iso",
        [
            ("chair", Aabb(min=[2.75, 4, 0], max=[3.25, 4.5, 0.9]), GREY, ()),
            ("chair", Aabb(min=[3.25, 4, 0], max=[3.75, 4.5, 0.9]), GREY, ()),
            ("chair", Aabb(min=[5, 1, 0], max=[5.5, 1.5, 0.9]), GREY, ()),
        ],
    )
    eye = np.array([3.0, 1.0, 1.6])
    target = scene.get_object(0)
    g = GestureRay.from_landmarks(eye, target.box.center)
    # the neighbor is about 8 degrees off the ray
    assert not target_isolated(scene, target, g)
    assert target_isolated(scene, target, g, cone=5.0)
    far = scene.get_object(2)
    g = GestureRay.from_landmarks(eye, far.box.center)
    assert target_isolated(scene, far, g)
    assert not target_isolated(scene, target, g)


@pytest.fixture(scope="module")
def table(micro_bench, pool, lexicons):
    return benchmark_table(micro_bench, pool, lexicons)


def test_benchmark_table(table, micro_bench):
    assert len(table) == 3 * len(micro_bench.samples)
    assert set(table["mode"]) == {"gesture", "lang", "full"}
    assert set(table["k"]) == {2, 3, 4, 5, 6}
    assert table["iou"].between(0, 1).all()
    assert (table[0.25] == (table["iou"] >= 0.25)).all()


def _check_acceptance(summary, table):
    gesture = summary["gesture"]["0.25"]
    lang = summary["lang"]["0.25"]
    full = summary["full"]["0.25"]
    assert full["overall"] >= gesture["overall"]
    assert full["overall"] >= lang["overall"]
    isolated = table[(table["mode"] == "gesture") & table["isolated"]]
    if len(isolated):
        assert gesture["isolated"] >= 0.9
    return lang


def test_micro_benchmark_acceptance(table):
    summary = summarize_benchmark(table)
    assert summary["n_samples"] == table["sample_id"].nunique()
    lang = _check_acceptance(summary, table)
    ks = table[table["mode"] == "lang"]["k"]
    assert lang["overall"] <= np.mean(1 / ks) + 0.1


@pytest.mark.slow
def test_micro_benchmark_acceptance_at_scale(pool, lexicons):
    bench = generate_micro_benchmark(
        250, pool, seed=3, k_values=(2, 3, 4, 5, 6), n_distractors=2
    )
    assert len(bench.samples) >= 200
    table = benchmark_table(bench, pool, lexicons)
    summary = summarize_benchmark(table)
    lang = _check_acceptance(summary, table)
    for k, accuracy in lang["per_k"].items():
        assert accuracy <= 1 / int(k) + 0.1
