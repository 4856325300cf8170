"""Network inputs and training targets of ERU samples.

Everything is expressed in the agent's body frame: the scene is moved by
the inverse of the placement transform, so the agent always stands at the
origin facing +y and the pointed-at object lies in front of it.
"""
import logging
import zlib
from dataclasses import dataclass
from typing import List, Mapping, Sequence, Tuple

import numpy as np
import torch

from erupoint.body.pool import AgentPool
from erupoint.data.data_set import EruSample
from erupoint.fusion.encoders import hash_tokens, proposal_inputs
from erupoint.fusion.model import FusionInput, FusionNet
from erupoint.geometry.bounding_box_utils import Aabb
from erupoint.geometry.point_cloud import PointCloud
from erupoint.placement.placement import Placement
from erupoint.placement.scene import Scene, SceneObject

logger = logging.getLogger(__name__)

# edge length of the smallest size-class template (meters)
SIZE_TEMPLATE_BASE = 0.125


@dataclass(frozen=True)
class LossTargets:
    objectness: torch.Tensor
    sem_cls: torch.Tensor
    center_offset: torch.Tensor
    size_cls: torch.Tensor
    size_residual: torch.Tensor
    target_class: int


@dataclass(frozen=True)
class FusionExample:
    sample: EruSample
    inputs: FusionInput
    targets: LossTargets
    gt_index: int
    boxes: List[Aabb]
    object_ids: List[int]

    @property
    def scene_id(self) -> str:
        return self.sample.scene_id


def semantic_class(label: str, n_classes: int) -> int:
    return zlib.crc32(label.lower().encode("utf-8")) % n_classes


def size_class(
    size: np.ndarray, n_size_classes: int
) -> Tuple[int, np.ndarray]:
    """Size bucket of a box by its largest edge, and the residual size.

    Bucket c holds boxes whose largest edge is about 0.125 * 2**c meters;
    the residual is the size minus the cube template of that bucket.
    """
    largest = max(float(np.max(size)), 1e-6)
    c = int(np.clip(np.floor(np.log2(largest / SIZE_TEMPLATE_BASE)), 0, None))
    c = min(c, n_size_classes - 1)
    template = SIZE_TEMPLATE_BASE * 2.0 ** (c + 0.5)
    return c, np.asarray(size, dtype=float) - template


def loss_targets(
    scene: Scene, target_id: int, n_classes: int, n_size_classes: int
) -> LossTargets:
    n = len(scene.objects)
    size_classes = np.empty(n, dtype=np.int64)
    residuals = np.empty((n, 3))
    for i, obj in enumerate(scene.objects):
        size_classes[i], residuals[i] = size_class(
            obj.box.size, n_size_classes
        )
    sem = [semantic_class(o.label, n_classes) for o in scene.objects]
    target = scene.get_object(target_id)
    return LossTargets(
        objectness=torch.ones(n, dtype=torch.long),
        sem_cls=torch.tensor(sem, dtype=torch.long),
        center_offset=torch.zeros((n, 3), dtype=torch.float64),
        size_cls=torch.as_tensor(size_classes),
        size_residual=torch.as_tensor(residuals, dtype=torch.float64),
        target_class=semantic_class(target.label, n_classes),
    )


def fusion_input(
    sample: EruSample, scene: Scene, pool: AgentPool, model: FusionNet
) -> FusionInput:
    agent = pool.agent(sample.agent_index)
    frame = sample.placement.transform.inverse()
    boxes = [o.box for o in scene.objects]
    return FusionInput(
        gesture=model.gesture_encoder.group(agent.cloud, model.dtype),
        token_ids=hash_tokens(sample.tokens, model.hparams["vocab_size"]),
        proposals=proposal_inputs(
            scene.cloud, boxes, frame=frame, dtype=model.dtype
        ),
    )


def build_example(
    sample: EruSample, scene: Scene, pool: AgentPool, model: FusionNet
) -> FusionExample:
    object_ids = [o.object_id for o in scene.objects]
    return FusionExample(
        sample=sample,
        inputs=fusion_input(sample, scene, pool, model),
        targets=loss_targets(
            scene,
            sample.object_id,
            model.hparams["n_classes"],
            model.hparams["n_size_classes"],
        ),
        gt_index=object_ids.index(sample.object_id),
        boxes=[o.box for o in scene.objects],
        object_ids=object_ids,
    )


def build_examples(
    samples: Sequence[EruSample],
    scenes: Mapping[str, Scene],
    pool: AgentPool,
    model: FusionNet,
) -> List[FusionExample]:
    examples = [
        build_example(s, scenes[s.scene_id], pool, model) for s in samples
    ]
    logger.info("built %d training examples", len(examples))
    return examples


def synthetic_example(
    model: FusionNet,
    seed: int,
    n_proposals: int = 8,
    n_tokens: int = 12,
    n_points: int = 256,
    points_per_box: int = 32,
) -> FusionExample:
    """A random example for gradient and shape checks.

    The agent is a random cloud of unit-normal points at the origin and
    the scene holds random labeled boxes filled with random points.
    """
    rng = np.random.default_rng(seed)
    normals = rng.normal(size=(n_points, 3))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    agent = PointCloud(
        points=rng.uniform([-0.3, -0.2, 0.0], [0.3, 0.6, 1.8], (n_points, 3)),
        normals=normals,
    )

    labels = ("chair", "table", "sofa", "lamp")
    objects = []
    clouds = []
    for i in range(n_proposals):
        center = rng.uniform([-2.0, 0.5, 0.5], [2.0, 4.0, 1.0])
        box = Aabb.from_center_size(center, rng.uniform(0.3, 1.0, size=3))
        start = i * points_per_box
        clouds.append(rng.uniform(box.min, box.max, (points_per_box, 3)))
        objects.append(
            SceneObject(
                object_id=i,
                label=labels[i % len(labels)],
                box=box,
                point_indices=np.arange(start, start + points_per_box),
            )
        )
    points = np.concatenate(clouds)
    cloud = PointCloud(points=points, colors=rng.uniform(0, 1, points.shape))
    scene = Scene(
        scene_id=f"synthetic{seed}", cloud=cloud, objects=objects, floor_z=0.0
    )

    words = [f"w{k}" for k in rng.integers(0, 1000, size=n_tokens)]
    target = int(rng.integers(n_proposals))
    sample = EruSample(
        sample_id=f"synthetic{seed}",
        scene_id=scene.scene_id,
        object_id=target,
        description=" ".join(words),
        placement=Placement(position=np.zeros(3), yaw=0.0, agent_index=0),
    )
    boxes = [o.box for o in objects]
    inputs = FusionInput(
        gesture=model.gesture_encoder.group(agent, model.dtype),
        token_ids=hash_tokens(sample.tokens, model.hparams["vocab_size"]),
        proposals=proposal_inputs(cloud, boxes, dtype=model.dtype),
    )
    return FusionExample(
        sample=sample,
        inputs=inputs,
        targets=loss_targets(
            scene,
            target,
            model.hparams["n_classes"],
            model.hparams["n_size_classes"],
        ),
        gt_index=target,
        boxes=boxes,
        object_ids=list(range(n_proposals)),
    )
