import logging
from typing import List, Mapping, Optional

import numpy as np
from joblib import Parallel, delayed

from erupoint.body.pool import AgentPool
from erupoint.config import Config
from erupoint.data.data_set import EruSample
from erupoint.data.descriptions import describe_object
from erupoint.errors import PlacementInfeasibleError
from erupoint.placement.placement import sample_placements
from erupoint.placement.scene import Scene
from erupoint.utils import derive_seed, resolve_jobs

logger = logging.getLogger(__name__)


def synthesize_scene(
    scene: Scene,
    scene_index: int,
    pool: AgentPool,
    seed: int,
    config: Optional[Config] = None,
) -> List[EruSample]:
    """Samples for every object of a scene, objects in id order.

    Objects without a feasible placement are skipped with a warning.
    """
    samples = []
    for target in sorted(scene.objects, key=lambda o: o.object_id):
        try:
            result = sample_placements(
                scene,
                target,
                pool,
                seed=derive_seed(seed, scene_index, target.object_id, 0),
                config=config,
            )
        except PlacementInfeasibleError as e:
            logger.warning(
                "scene %s object %d: %s", scene.scene_id, target.object_id, e
            )
            continue
        rng = np.random.default_rng(
            derive_seed(seed, scene_index, target.object_id, 1)
        )
        for position_index, placement in enumerate(result):
            samples.append(
                EruSample(
                    sample_id=(
                        f"{scene.scene_id}_{target.object_id}_{position_index}"
                    ),
                    scene_id=scene.scene_id,
                    object_id=target.object_id,
                    description=describe_object(scene, target, rng),
                    placement=placement,
                )
            )
    logger.info("scene %s: %d samples", scene.scene_id, len(samples))
    return samples


def synthesize_samples(
    scenes: Mapping[str, Scene],
    pool: AgentPool,
    seed: int,
    config: Optional[Config] = None,
    n_jobs: int = 1,
) -> List[EruSample]:
    """Samples of every scene, scenes in sorted id order.

    Each scene draws from its own derived seed, so the output does not
    depend on `n_jobs`.
    """
    scene_ids = sorted(scenes)
    per_scene = Parallel(n_jobs=resolve_jobs(n_jobs))(
        delayed(synthesize_scene)(scenes[scene_id], index, pool, seed, config)
        for index, scene_id in enumerate(scene_ids)
    )
    return [sample for samples in per_scene for sample in samples]
