"""Geometric grounding accuracy on micro benchmarks.

Every sample is grounded in the gesture, language and full modes and
scored at each IoU threshold; results are broken down by the number k of
identical objects in the scene.
"""
import logging
from typing import Any, Dict, Sequence

import numpy as np
import pandas as pd

from erupoint import constants
from erupoint.body.pool import AgentPool
from erupoint.data.micro_scenes import MicroBenchmark
from erupoint.data.stats import Lexicons
from erupoint.geometry.bounding_box_utils import aabb_iou, angle_between
from erupoint.grounding.baselines import ground_all_modes
from erupoint.grounding.grounding_manager import sample_gesture
from erupoint.grounding.virtual_touch_line import GestureRay
from erupoint.placement.scene import Scene, SceneObject

logger = logging.getLogger(__name__)

# half-angle of the cone in which a target counts as singled out (degrees)
ISOLATION_CONE = 15.0


def target_isolated(
    scene: Scene,
    target: SceneObject,
    g: GestureRay,
    cone: float = ISOLATION_CONE,
) -> bool:
    """Whether the target is the only object centered within the cone."""
    inside = []
    for obj in scene.objects:
        to_center = obj.box.center - g.origin
        if np.any(to_center) and angle_between(g.dir, to_center) <= cone:
            inside.append(obj.object_id)
    return inside == [target.object_id]


def benchmark_table(
    bench: MicroBenchmark,
    pool: AgentPool,
    lexicons: Lexicons,
    w_g: float = 0.5,
    w_l: float = 0.5,
    thresholds: Sequence[float] = constants.IOU_THRESHOLDS,
) -> pd.DataFrame:
    """Ground every benchmark sample with the three geometric modes.

    Parameters
    ----------
    bench : MicroBenchmark
        Scenes, samples and the identical-object count k of each scene.
    pool : AgentPool
        Pool holding the agents the samples refer to.
    lexicons : Lexicons
        Attribute word sets for language grounding.
    w_g, w_l : float
        Weights of the full mode.
    thresholds : sequence of float
        IoU thresholds; each becomes a boolean column.

    Returns
    -------
    table : pandas.DataFrame
        One row per sample and mode with columns sample_id, k, mode,
        isolated, iou and one column per threshold.
    """
    rows = []
    for sample in bench.samples:
        scene = bench.scenes[sample.scene_id]
        target = scene.get_object(sample.object_id)
        g = sample_gesture(sample, pool)
        isolated = target_isolated(scene, target, g)
        predictions = ground_all_modes(
            scene, g, sample.tokens, lexicons, w_g=w_g, w_l=w_l
        )
        for prediction in predictions:
            iou = aabb_iou(prediction.box, target.box)
            row = {
                "sample_id": sample.sample_id,
                "k": bench.k_of_scene[sample.scene_id],
                "mode": prediction.mode,
                "isolated": isolated,
                "iou": iou,
            }
            row.update({t: iou >= t for t in thresholds})
            rows.append(row)
    return pd.DataFrame(rows)


def summarize_benchmark(
    table: pd.DataFrame,
    thresholds: Sequence[float] = constants.IOU_THRESHOLDS,
) -> Dict[str, Any]:
    """Accuracy per mode: overall, per k, and on isolated targets."""
    summary: Dict[str, Any] = {"n_samples": int(table["sample_id"].nunique())}
    for mode, rows in table.groupby("mode", sort=True):
        by_k = rows.groupby("k", sort=True)
        isolated = rows[rows["isolated"]]
        summary[mode] = {
            f"{t:g}": {
                "overall": float(rows[t].mean()),
                "per_k": {str(k): float(v) for k, v in by_k[t].mean().items()},
                "isolated": (
                    float(isolated[t].mean()) if len(isolated) else None
                ),
            }
            for t in thresholds
        }
    first = f"{thresholds[0]:g}"
    logger.info(
        "benchmark over %d samples at IoU %s: %s",
        summary["n_samples"],
        first,
        ", ".join(
            f"{mode} {summary[mode][first]['overall']:.3f}"
            for mode in sorted(table["mode"].unique())
        ),
    )
    return summary
