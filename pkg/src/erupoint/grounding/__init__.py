from erupoint.grounding.baselines import (
    GroundingPrediction,
    ground_full,
    ground_gesture_only,
    ground_lang_only,
)
from erupoint.grounding.grounding_manager import (
    FusionGrounder,
    GeometricGrounder,
    GroundingManager,
    read_predictions,
    write_predictions,
)
from erupoint.grounding.virtual_touch_line import (
    GestureRay,
    gesture_ray,
    rank_objects,
    vtl_score,
)

__all__ = (
    "FusionGrounder",
    "GeometricGrounder",
    "GestureRay",
    "GroundingManager",
    "GroundingPrediction",
    "gesture_ray",
    "ground_full",
    "ground_gesture_only",
    "ground_lang_only",
    "rank_objects",
    "read_predictions",
    "vtl_score",
    "write_predictions",
)
