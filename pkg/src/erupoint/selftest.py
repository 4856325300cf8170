"""Fast invariant checks run by ``erupoint selftest``.

Each check raises AssertionError (or any other exception) on failure.
The report has one line per check: ``PASS <name>`` or
``FAIL <name>: <reason>``.
"""
import logging
import math
import sys
from typing import Callable, List, TextIO, Tuple

import numpy as np
import torch

from erupoint import constants
from erupoint.body.human_model import build_human
from erupoint.body.pose import pose_pointing
from erupoint.data.data_set import EruSample
from erupoint.evaluation.metrics import evaluate
from erupoint.fusion.features import synthetic_example
from erupoint.fusion.loss import compose_det, compose_total, compute_loss
from erupoint.fusion.model import FusionNet
from erupoint.fusion.training import grad_check
from erupoint.geometry.bounding_box_utils import (
    Aabb,
    Ray,
    aabb_iou,
    ray_aabb_intersect,
)
from erupoint.geometry.point_cloud import PointCloud, voxel_downsample
from erupoint.grounding.baselines import GroundingPrediction
from erupoint.placement.placement import Placement
from erupoint.placement.scene import Scene, SceneObject

logger = logging.getLogger(__name__)

Check = Tuple[str, Callable[[], None]]


def check_iou_closed_form() -> None:
    unit = Aabb(min=[0, 0, 0], max=[1, 1, 1])
    assert aabb_iou(unit, unit) == 1.0
    half = Aabb(min=[0.5, 0, 0], max=[1.5, 1, 1])
    assert math.isclose(aabb_iou(unit, half), 1 / 3, abs_tol=1e-12)
    far = Aabb(min=[2, 2, 2], max=[3, 3, 3])
    assert aabb_iou(unit, far) == 0.0


def check_ray_slab() -> None:
    box = Aabb(min=[0, -1, -1], max=[1, 1, 1])
    hit = ray_aabb_intersect(Ray(origin=[-1, 0, 0], dir=[1, 0, 0]), box)
    assert hit is not None and np.allclose(hit, (1.0, 2.0))
    away = Ray(origin=[-1, 0, 0], dir=[-1, 0, 0])
    assert ray_aabb_intersect(away, box) is None


def check_voxel_centroid() -> None:
    cloud = PointCloud(points=[[0, 0, 0], [0.001, 0, 0], [1, 1, 1]])
    down = voxel_downsample(cloud, 0.01)
    np.testing.assert_allclose(down.points, [[0.0005, 0, 0], [1, 1, 1]])


def check_agent_cloud() -> None:
    model = build_human(0, seed=0)
    agent = pose_pointing(model, "right", 0.0, seed=0, perturb={})
    assert len(agent.cloud) == constants.AGENT_POINTS
    arm = agent.fingertip - model.joints["shoulder_R"]
    elevation = math.degrees(math.atan2(arm[2], arm[1]))
    assert abs(elevation) < 1e-6, elevation


def check_loss_composition() -> None:
    rng = np.random.default_rng(0)
    for loc, det, cls, vote, objn, sem, box in rng.uniform(0, 10, (100, 7)):
        total = compose_total(loc, det, cls)
        assert math.isclose(total, 0.3 * loc + 10 * det + 0.1 * cls)
        assert math.isclose(
            compose_det(vote, objn, sem, box),
            vote + 0.1 * objn + 0.1 * sem + box,
        )


def _small_model(seed: int) -> FusionNet:
    torch.manual_seed(seed)
    return FusionNet(
        hidden_size=8, vocab_size=64, embed_dim=8, n_centroids=8
    )


def check_fusion_softmax() -> None:
    model = _small_model(0)
    example = synthetic_example(model, seed=0, n_proposals=4, n_points=64)
    output = model(example.inputs)
    assert math.isclose(float(output.confidences.sum()), 1.0, abs_tol=1e-6)
    assert bool(torch.all(output.confidences >= 0))
    losses = compute_loss(
        output.confidences, example.gt_index, output.aux, example.targets
    )
    assert math.isfinite(float(losses.L_total))


def check_gradients() -> None:
    model = _small_model(1)
    batch = [synthetic_example(model, seed=1, n_proposals=3, n_points=64)]
    error = grad_check(model, batch, fraction=0.0, min_entries=2)
    assert error < 1e-4, f"relative gradient error {error:.2e}"


def check_weighted_overall() -> None:
    objects = [
        SceneObject(i, label, Aabb.from_center_size([2.0 * i, 0, 1], [1] * 3))
        for i, label in enumerate(("chair", "chair", "table"))
    ]
    scene = Scene("s", PointCloud(points=np.zeros((1, 3))), objects, -1.0)
    placement = Placement(position=[0, -3, 0], yaw=0.0, agent_index=0)
    samples = [
        EruSample(f"s{i}", "s", i, "the object", placement) for i in range(3)
    ]
    predictions = [
        GroundingPrediction(0, objects[0].box, 1.0, "lang", "s0"),
        GroundingPrediction(0, objects[0].box, 1.0, "lang", "s1"),
        GroundingPrediction(2, objects[2].box, 1.0, "lang", "s2"),
    ]
    report = evaluate(predictions, samples, {"s": scene})
    for t in constants.IOU_THRESHOLDS:
        weighted = (
            report.accuracy["unique"][t] * report.counts["unique"]
            + report.accuracy["multiple"][t] * report.counts["multiple"]
        ) / report.counts["overall"]
        assert abs(weighted - report.accuracy["overall"][t]) < 1e-12
    assert report.accuracy["multiple"][0.25] == 0.5


CHECKS: List[Check] = [
    ("iou_closed_form", check_iou_closed_form),
    ("ray_slab", check_ray_slab),
    ("voxel_centroid", check_voxel_centroid),
    ("agent_cloud", check_agent_cloud),
    ("loss_composition", check_loss_composition),
    ("fusion_softmax", check_fusion_softmax),
    ("gradients", check_gradients),
    ("weighted_overall", check_weighted_overall),
]


def run_selftest(stream: TextIO = sys.stdout) -> bool:
    """Run every check and report it on `stream`; True when all pass."""
    passed = True
    for name, check in CHECKS:
        try:
            check()
        except Exception as e:  # noqa: BLE001
            passed = False
            logger.debug("check %s failed", name, exc_info=True)
            stream.write(f"FAIL {name}: {e}\n")
        else:
            stream.write(f"PASS {name}\n")
    return passed
