from erupoint.placement.placement import (
    Placement,
    PlacementResult,
    line_of_sight_clear,
    sample_placements,
    solve_pointing,
)
from erupoint.placement.scene import Scene, SceneObject, load_scenes
from erupoint.placement.verification import verify_placement

__all__ = (
    "Placement",
    "PlacementResult",
    "Scene",
    "SceneObject",
    "line_of_sight_clear",
    "load_scenes",
    "sample_placements",
    "solve_pointing",
    "verify_placement",
)
