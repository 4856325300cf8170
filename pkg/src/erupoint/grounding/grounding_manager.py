import json
import logging
from pathlib import Path
from typing import List, Optional, Protocol, Sequence, Union

import torch
from sklearn.exceptions import NotFittedError

from erupoint import constants
from erupoint.body.pool import AgentPool
from erupoint.data.data_manager import DataManager
from erupoint.data.data_set import EruSample
from erupoint.data.stats import Lexicons
from erupoint.fusion.checkpoint import load_checkpoint
from erupoint.fusion.features import fusion_input
from erupoint.fusion.model import FusionNet
from erupoint.grounding.baselines import (
    GroundingPrediction,
    ground_full,
    ground_gesture_only,
    ground_lang_only,
)
from erupoint.grounding.virtual_touch_line import GestureRay
from erupoint.placement.scene import Scene

logger = logging.getLogger(__name__)

GEOMETRIC_MODES = (
    constants.MODE_GESTURE,
    constants.MODE_LANG,
    constants.MODE_FULL,
)


class Grounder(Protocol):
    """Protocol for grounders that are compatible with the
    GroundingManager.
    """

    mode: str

    def predict(
        self, sample: EruSample, scene: Scene, pool: AgentPool
    ) -> GroundingPrediction: ...


def sample_gesture(sample: EruSample, pool: AgentPool) -> GestureRay:
    """The world-frame virtual touch line of a sample's placed agent."""
    eye, fingertip = pool.landmarks(sample.agent_index)
    transform = sample.placement.transform
    return GestureRay.from_landmarks(
        transform.apply(eye), transform.apply(fingertip)
    )


class GeometricGrounder:
    def __init__(
        self,
        mode: str,
        lexicons: Lexicons,
        w_g: float = 0.5,
        w_l: float = 0.5,
    ):
        if mode not in GEOMETRIC_MODES:
            raise ValueError(f"unknown geometric grounding mode: {mode}")
        self.mode = mode
        self.lexicons = lexicons
        self.w_g = w_g
        self.w_l = w_l

    def predict(
        self, sample: EruSample, scene: Scene, pool: AgentPool
    ) -> GroundingPrediction:
        if self.mode == constants.MODE_GESTURE:
            return ground_gesture_only(scene, sample_gesture(sample, pool))
        if self.mode == constants.MODE_LANG:
            return ground_lang_only(scene, sample.tokens, self.lexicons)
        return ground_full(
            scene,
            sample_gesture(sample, pool),
            sample.tokens,
            self.lexicons,
            w_g=self.w_g,
            w_l=self.w_l,
        )


class FusionGrounder:
    """Grounding with the learned fusion network.

    The network sees the scene in the agent's body frame and picks one of
    the annotated object boxes.
    """

    mode = constants.MODE_FUSION

    def __init__(self, model: Optional[FusionNet] = None):
        self.model = model

    @classmethod
    def from_checkpoint(cls, path: Union[str, Path]) -> "FusionGrounder":
        return cls(load_checkpoint(path))

    def predict(
        self, sample: EruSample, scene: Scene, pool: AgentPool
    ) -> GroundingPrediction:
        if self.model is None:
            raise NotFittedError(
                "You must train the fusion network first, "
                "for example with `erupoint train-toy`."
            )
        inputs = fusion_input(sample, scene, pool, self.model)
        with torch.no_grad():
            confidences = self.model(inputs).confidences
        index = int(torch.argmax(confidences))
        target = scene.objects[index]
        return GroundingPrediction(
            object_id=target.object_id,
            box=target.box,
            confidence=min(max(float(confidences[index]), 0.0), 1.0),
            mode=self.mode,
        )


class GroundingManager:
    def __init__(self, data: DataManager, grounder: Grounder):
        self.data = data
        self.grounder = grounder

    def predict_sample(self, sample: EruSample) -> GroundingPrediction:
        scene = self.data.scenes[sample.scene_id]
        prediction = self.grounder.predict(sample, scene, self.data.pool)
        return GroundingPrediction(
            object_id=prediction.object_id,
            box=prediction.box,
            confidence=prediction.confidence,
            mode=prediction.mode,
            sample_id=sample.sample_id,
        )

    def predict(
        self, samples: Optional[Sequence[EruSample]] = None
    ) -> List[GroundingPrediction]:
        """Predict every sample of the data manager, or the given ones.

        Returns
        -------
        predictions : list of GroundingPrediction
            One prediction per sample, in sample order.
        """
        samples = self.data.samples if samples is None else samples
        predictions = [self.predict_sample(s) for s in samples]
        logger.info(
            "grounded %d samples in %s mode",
            len(predictions),
            self.grounder.mode,
        )
        return predictions


def write_predictions(
    predictions: Sequence[GroundingPrediction], path: Union[str, Path]
) -> None:
    with open(path, "w") as f:
        for prediction in predictions:
            f.write(json.dumps(prediction.to_dict(), sort_keys=True))
            f.write("\n")


def read_predictions(path: Union[str, Path]) -> List[GroundingPrediction]:
    predictions = []
    with open(path) as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                predictions.append(GroundingPrediction.from_dict(data))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ValueError(
                    f"{path} line {line_number}: invalid prediction ({e})"
                ) from None
    return predictions
