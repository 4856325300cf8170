"""Geometric and lexical grounding for the three ablation modes.

Candidates are the annotated object boxes of the scene: gesture-only
grounding ranks them by the virtual touch line, language-only grounding
by label and attribute words, and full grounding by a weighted sum of
both normalized scores.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Union

from erupoint import constants
from erupoint.body.pose import PosedAgent
from erupoint.data.stats import Lexicons
from erupoint.errors import NoCandidatesError
from erupoint.geometry.bounding_box_utils import Aabb
from erupoint.grounding.virtual_touch_line import (
    GestureRay,
    gesture_ray,
    order_scores,
    vtl_score,
)
from erupoint.placement.scene import Scene, SceneObject
from erupoint.utils import tokenize

LABEL_SCORE = 1.0
ATTRIBUTE_SCORE = 0.25
MAX_ATTRIBUTE_HITS = 2
MAX_LANG_SCORE = LABEL_SCORE + ATTRIBUTE_SCORE * MAX_ATTRIBUTE_HITS

MODES = (
    constants.MODE_GESTURE,
    constants.MODE_LANG,
    constants.MODE_FULL,
    constants.MODE_FUSION,
)

Gesture = Union[PosedAgent, GestureRay]


@dataclass(frozen=True)
class GroundingPrediction:
    object_id: int
    box: Aabb
    confidence: float
    mode: str
    sample_id: str = ""

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown grounding mode: {self.mode}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(
                f"confidence must lie in [0, 1], got {self.confidence}"
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "object_id": self.object_id,
            "box": self.box.to_dict(),
            "confidence": self.confidence,
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GroundingPrediction":
        return cls(
            object_id=int(data["object_id"]),
            box=Aabb.from_dict(data["box"]),
            confidence=float(data["confidence"]),
            mode=data["mode"],
            sample_id=str(data["sample_id"]),
        )


def _as_gesture(agent: Gesture) -> GestureRay:
    if isinstance(agent, GestureRay):
        return agent
    return gesture_ray(agent)


def _check_candidates(scene: Scene) -> None:
    if not scene.objects:
        raise NoCandidatesError(f"scene {scene.scene_id} has no objects")


def _predict(
    scene: Scene, scores: Dict[int, float], mode: str, scale: float = 1.0
) -> GroundingPrediction:
    object_id, score = order_scores(list(scores.items()))[0]
    return GroundingPrediction(
        object_id=object_id,
        box=scene.get_object(object_id).box,
        confidence=min(max(score / scale, 0.0), 1.0),
        mode=mode,
    )


def gesture_scores(scene: Scene, agent: Gesture) -> Dict[int, float]:
    """Virtual touch line score of every object, by object id."""
    g = _as_gesture(agent)
    return {o.object_id: vtl_score(g, o.box) for o in scene.objects}


def lang_score(
    obj: SceneObject, tokens: Sequence[str], lexicons: Lexicons
) -> float:
    """Score how well a description names an object.

    Parameters
    ----------
    obj : SceneObject
        The candidate object.
    tokens : sequence of str
        Lowercase description tokens.
    lexicons : Lexicons
        Attribute word sets; an attribute counts only when it is a
        lexicon word.

    Returns
    -------
    score : float
        LABEL_SCORE when every label token appears, plus ATTRIBUTE_SCORE
        per attribute word the description repeats, capped at
        MAX_ATTRIBUTE_HITS words. Lies in [0, MAX_LANG_SCORE].
    """
    tokens = set(tokens)
    label_tokens = set(tokenize(obj.label))
    score = LABEL_SCORE if label_tokens and label_tokens <= tokens else 0.0
    attribute_words = set().union(*lexicons.values())
    attributes = {a.lower() for a in obj.attributes}
    hits = len(tokens & attributes & attribute_words)
    return score + ATTRIBUTE_SCORE * min(hits, MAX_ATTRIBUTE_HITS)


def lang_scores(
    scene: Scene, tokens: Sequence[str], lexicons: Lexicons
) -> Dict[int, float]:
    return {
        o.object_id: lang_score(o, tokens, lexicons) for o in scene.objects
    }


def ground_gesture_only(scene: Scene, agent: Gesture) -> GroundingPrediction:
    """Ground a reference from the pointing gesture alone.

    Parameters
    ----------
    scene : Scene
        Scene whose object boxes are the candidates.
    agent : PosedAgent or GestureRay
        The pointing agent in world coordinates, or its gesture ray.

    Returns
    -------
    prediction : GroundingPrediction
        The object the virtual touch line scores highest, ties to the
        lowest id. The confidence is that score.

    Raises
    ------
    NoCandidatesError
        When the scene has no objects.
    """
    _check_candidates(scene)
    scores = gesture_scores(scene, agent)
    return _predict(scene, scores, constants.MODE_GESTURE)


def ground_lang_only(
    scene: Scene, tokens: Sequence[str], lexicons: Lexicons
) -> GroundingPrediction:
    """Ground a reference from the description alone.

    Identical objects tie and the lowest id wins.

    Parameters
    ----------
    scene : Scene
        Scene whose object boxes are the candidates.
    tokens : sequence of str
        Lowercase description tokens. Must not be empty.
    lexicons : Lexicons
        Attribute word sets used by `lang_score`.

    Returns
    -------
    prediction : GroundingPrediction
        The top `lang_score` object; the confidence is its score divided
        by MAX_LANG_SCORE.

    Raises
    ------
    NoCandidatesError
        When the scene has no objects.
    """
    if len(tokens) == 0:
        raise ValueError("tokens must not be empty")
    _check_candidates(scene)
    return _predict(
        scene,
        lang_scores(scene, tokens, lexicons),
        constants.MODE_LANG,
        scale=MAX_LANG_SCORE,
    )


def ground_full(
    scene: Scene,
    agent: Gesture,
    tokens: Sequence[str],
    lexicons: Lexicons,
    w_g: float = 0.5,
    w_l: float = 0.5,
) -> GroundingPrediction:
    """Ground a reference from the gesture and the description together.

    Each object scores w_g * its virtual touch line score plus w_l * its
    language score divided by MAX_LANG_SCORE.

    Parameters
    ----------
    scene : Scene
        Scene whose object boxes are the candidates.
    agent : PosedAgent or GestureRay
        The pointing agent in world coordinates, or its gesture ray.
    tokens : sequence of str
        Lowercase description tokens. Must not be empty.
    lexicons : Lexicons
        Attribute word sets used by `lang_score`.
    w_g, w_l : float
        Non-negative gesture and language weights with a positive sum.

    Returns
    -------
    prediction : GroundingPrediction
        The top scoring object; the confidence is its combined score
        divided by w_g + w_l.

    Raises
    ------
    NoCandidatesError
        When the scene has no objects.
    """
    if w_g < 0 or w_l < 0 or w_g + w_l <= 0:
        raise ValueError("weights must be non-negative with a positive sum")
    if len(tokens) == 0:
        raise ValueError("tokens must not be empty")
    _check_candidates(scene)

    gesture = gesture_scores(scene, agent)
    language = lang_scores(scene, tokens, lexicons)
    combined = {
        object_id: w_g * gesture[object_id]
        + w_l * language[object_id] / MAX_LANG_SCORE
        for object_id in gesture
    }
    return _predict(scene, combined, constants.MODE_FULL, scale=w_g + w_l)


def ground_all_modes(
    scene: Scene,
    agent: Gesture,
    tokens: Sequence[str],
    lexicons: Lexicons,
    w_g: float = 0.5,
    w_l: float = 0.5,
) -> List[GroundingPrediction]:
    """Gesture-only, language-only and full predictions, in that order."""
    return [
        ground_gesture_only(scene, agent),
        ground_lang_only(scene, tokens, lexicons),
        ground_full(scene, agent, tokens, lexicons, w_g=w_g, w_l=w_l),
    ]
