"""Acc@IoU over the unique and multiple subsets.

A sample is unique when its target is the only object of its label in
the scene and multiple otherwise; overall pools both subsets, so its
accuracy is the count-weighted mean of the two.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Sequence

import numpy as np
import pandas as pd
import toolz as tz

from erupoint import constants
from erupoint.data.data_set import EruSample
from erupoint.errors import DuplicatePredictionError
from erupoint.geometry.bounding_box_utils import aabb_iou
from erupoint.grounding.baselines import GroundingPrediction
from erupoint.placement.scene import Scene, SceneObject

logger = logging.getLogger(__name__)

SUBSETS = (constants.UNIQUE, constants.MULTIPLE, constants.OVERALL)
TABLE_COLUMNS = ["sample_id", "scene_id", "subset", "iou"]


def classify_sample(scene: Scene, target: SceneObject) -> str:
    """UNIQUE when no other object shares the target's label, else MULTIPLE.

    Labels compare case-insensitively.
    """
    if scene.label_count(target.label) == 1:
        return constants.UNIQUE
    return constants.MULTIPLE


@dataclass(frozen=True)
class EvalReport:
    """Accuracy per subset and IoU threshold.

    accuracy : subset -> threshold -> fraction of correct samples.
    counts : subset -> number of samples.
    missing : ids of samples without a prediction, counted as incorrect.
    """

    accuracy: Dict[str, Dict[float, float]]
    counts: Dict[str, int]
    missing: List[str]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accuracy": {
                subset: {f"{t:g}": a for t, a in by_threshold.items()}
                for subset, by_threshold in self.accuracy.items()
            },
            "counts": dict(self.counts),
            "missing": list(self.missing),
        }


def evaluation_table(
    predictions: Sequence[GroundingPrediction],
    samples: Sequence[EruSample],
    scenes: Mapping[str, Scene],
) -> pd.DataFrame:
    """One row per sample: subset and IoU with the ground truth.

    Samples without a prediction get a NaN IoU.
    """
    counts = tz.frequencies(p.sample_id for p in predictions)
    duplicates = sorted(k for k, v in counts.items() if v > 1)
    if duplicates:
        raise DuplicatePredictionError(
            f"duplicate predictions for samples: {', '.join(duplicates)}"
        )
    by_id = {p.sample_id: p for p in predictions}
    sample_ids = {s.sample_id for s in samples}
    unknown = sorted(set(by_id) - sample_ids)
    if unknown:
        raise ValueError(
            f"predictions for unknown samples: {', '.join(unknown)}"
        )

    rows = []
    for sample in samples:
        scene = scenes[sample.scene_id]
        target = scene.get_object(sample.object_id)
        prediction = by_id.get(sample.sample_id)
        iou = np.nan
        if prediction is not None:
            iou = aabb_iou(prediction.box, target.box)
        rows.append(
            {
                "sample_id": sample.sample_id,
                "scene_id": sample.scene_id,
                "subset": classify_sample(scene, target),
                "iou": iou,
            }
        )
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def evaluate(
    predictions: Sequence[GroundingPrediction],
    samples: Sequence[EruSample],
    scenes: Mapping[str, Scene],
    thresholds: Sequence[float] = constants.IOU_THRESHOLDS,
) -> EvalReport:
    """Score predictions against the samples' target boxes.

    A prediction is correct at threshold t when its IoU with the target
    box is at least t.

    Raises
    ------
    DuplicatePredictionError
        When a sample has more than one prediction.
    """
    table = evaluation_table(predictions, samples, scenes)
    for t in thresholds:
        table[t] = table["iou"].fillna(-1.0) >= t

    accuracy = {}
    counts = {}
    for subset in SUBSETS:
        if subset == constants.OVERALL:
            rows = table
        else:
            rows = table[table["subset"] == subset]
        counts[subset] = len(rows)
        accuracy[subset] = {
            t: float(rows[t].mean()) if len(rows) else 0.0 for t in thresholds
        }
    missing = table.loc[table["iou"].isna(), "sample_id"].tolist()
    if missing:
        logger.warning("%d samples have no prediction", len(missing))
    return EvalReport(accuracy=accuracy, counts=counts, missing=missing)
