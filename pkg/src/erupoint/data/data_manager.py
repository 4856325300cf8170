import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import toolz as tz

from erupoint.body.pool import AgentPool
from erupoint.data.composition import ComposedScene, compose_scene
from erupoint.data.data_set import EruSample
from erupoint.placement.scene import Scene, SceneObject

logger = logging.getLogger(__name__)

TRAIN = "train"
VAL = "val"


@dataclass(frozen=True)
class SplitSpec:
    """Scene-level assignment of samples to the train and val splits."""

    train_fraction: float
    assignment: Mapping[str, str]

    def split_of(self, scene_id: str) -> str:
        return self.assignment[scene_id]

    def select(
        self, samples: Sequence[EruSample], split: str
    ) -> List[EruSample]:
        if split not in (TRAIN, VAL):
            raise ValueError(f"unknown split: {split}")
        return [s for s in samples if self.assignment[s.scene_id] == split]


def split_samples(
    samples: Sequence[EruSample], train_fraction: float, seed: int
) -> SplitSpec:
    """Split samples by scene so that no scene lands in both splits.

    Scenes are shuffled with the seed, then assigned to train until the
    train sample count first reaches `train_fraction` of all samples; the
    remaining scenes go to val.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(
            f"train_fraction must lie in (0, 1), got {train_fraction}"
        )
    counts = tz.frequencies(s.scene_id for s in samples)
    scene_ids = sorted(counts)
    order = np.random.default_rng(seed).permutation(len(scene_ids))

    goal = train_fraction * len(samples)
    n_train = 0
    assignment = {}
    for position in order:
        scene_id = scene_ids[position]
        if n_train < goal:
            assignment[scene_id] = TRAIN
            n_train += counts[scene_id]
        else:
            assignment[scene_id] = VAL
    return SplitSpec(train_fraction=train_fraction, assignment=assignment)


class DataManager:
    """Samples together with the scenes and agent pool they refer to."""

    def __init__(
        self,
        samples: Sequence[EruSample],
        scenes: Mapping[str, Scene],
        pool: AgentPool,
        split: Optional[SplitSpec] = None,
    ):
        self.samples = list(samples)
        self.scenes = dict(scenes)
        self.pool = pool
        self.split = split
        self._validate()

    def _validate(self) -> None:
        for sample in self.samples:
            if sample.scene_id not in self.scenes:
                raise KeyError(
                    f"sample {sample.sample_id}: unknown scene "
                    f"{sample.scene_id}"
                )
            # raises KeyError for a missing object
            self.scenes[sample.scene_id].get_object(sample.object_id)
            if not 0 <= sample.agent_index < len(self.pool):
                raise IndexError(
                    f"sample {sample.sample_id}: agent index "
                    f"{sample.agent_index} out of range"
                )

    def __len__(self) -> int:
        return len(self.samples)

    def get_sample(self, sample_id: str) -> EruSample:
        for sample in self.samples:
            if sample.sample_id == sample_id:
                return sample
        raise KeyError(f"unknown sample: {sample_id}")

    def scene_and_target(
        self, sample: EruSample
    ) -> Tuple[Scene, SceneObject]:
        scene = self.scenes[sample.scene_id]
        return scene, scene.get_object(sample.object_id)

    def samples_by_scene(self) -> Dict[str, List[EruSample]]:
        return tz.groupby(lambda s: s.scene_id, self.samples)

    def iter_split(self, split: str) -> Iterator[EruSample]:
        """Samples of one split, in file order."""
        if self.split is None:
            raise ValueError("no split has been assigned")
        yield from self.split.select(self.samples, split)

    def compose(self, sample: EruSample) -> ComposedScene:
        return compose_scene(self.scenes[sample.scene_id], sample, self.pool)
