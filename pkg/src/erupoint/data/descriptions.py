from typing import Sequence

import numpy as np

from erupoint.placement.scene import Scene, SceneObject

_RELATIONS = (
    "near",
    "next to",
    "behind",
    "in front of",
    "to the left of",
    "to the right of",
)


def describe_object(
    scene: Scene, target: SceneObject, rng: np.random.Generator
) -> str:
    """A referring expression for `target`.

    One of the object's own descriptions when it ships any, otherwise a
    template built from its label, its attributes and the nearest other
    object.
    """
    if target.descriptions:
        return target.descriptions[int(rng.integers(len(target.descriptions)))]

    label = target.label.lower()
    templates = [f"the {label}"]
    if target.attributes:
        templates.append(f"the {' '.join(target.attributes)} {label}")
    others = scene.others(target)
    if others:
        nearest = _nearest(target, others)
        relation = _RELATIONS[int(rng.integers(len(_RELATIONS)))]
        templates.append(f"the {label} {relation} the {nearest.label.lower()}")
    return templates[int(rng.integers(len(templates)))]


def _nearest(target: SceneObject, others: Sequence[SceneObject]) -> SceneObject:
    distances = [
        np.linalg.norm(o.box.center - target.box.center) for o in others
    ]
    return others[int(np.argmin(distances))]
