import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from erupoint import constants
from erupoint.data.data_manager import TRAIN, split_samples
from erupoint.errors import NumericError
from erupoint.fusion.features import FusionExample
from erupoint.fusion.loss import LossBreakdown, compute_loss
from erupoint.fusion.model import FusionNet
from erupoint.geometry.bounding_box_utils import aabb_iou

logger = logging.getLogger(__name__)

MIN_TRAINING_EXAMPLES = 64

# gradients smaller than this are compared absolutely
_GRAD_FLOOR = 1e-3


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    step: int
    train_loss: float
    accuracy: Dict[float, float]

    def to_dict(self):
        return {
            "epoch": self.epoch,
            "step": self.step,
            "train_loss": self.train_loss,
            "accuracy": {str(k): v for k, v in self.accuracy.items()},
        }


@dataclass
class TrainingTrace:
    """Per-step training losses and per-epoch held-out accuracies."""

    losses: List[float] = field(default_factory=list)
    epochs: List[EpochRecord] = field(default_factory=list)
    n_train: int = 0
    n_held_out: int = 0

    def to_dict(self):
        return {
            "losses": list(self.losses),
            "epochs": [e.to_dict() for e in self.epochs],
            "n_train": self.n_train,
            "n_held_out": self.n_held_out,
        }


def example_loss(model: FusionNet, example: FusionExample) -> LossBreakdown:
    output = model(example.inputs)
    return compute_loss(
        output.confidences, example.gt_index, output.aux, example.targets
    )


def batch_loss(
    model: FusionNet, examples: Sequence[FusionExample]
) -> torch.Tensor:
    """Mean total loss, summed in example order."""
    total = sum(example_loss(model, e).L_total for e in examples)
    return total / len(examples)


def predict_index(model: FusionNet, example: FusionExample) -> int:
    with torch.no_grad():
        confidences = model(example.inputs).confidences
    return int(torch.argmax(confidences))


def model_accuracy(
    model: FusionNet,
    examples: Sequence[FusionExample],
    thresholds: Sequence[float] = constants.IOU_THRESHOLDS,
) -> Dict[float, float]:
    """Acc@IoU of the predicted proposal box against the ground truth."""
    if len(examples) == 0:
        return {t: 0.0 for t in thresholds}
    ious = np.array(
        [
            aabb_iou(e.boxes[predict_index(model, e)], e.boxes[e.gt_index])
            for e in examples
        ]
    )
    return {t: float(np.mean(ious >= t)) for t in thresholds}


def split_examples(
    examples: Sequence[FusionExample], held_out: float, seed: int
) -> Tuple[List[FusionExample], List[FusionExample]]:
    """Scene-disjoint train and held-out examples."""
    split = split_samples([e.sample for e in examples], 1 - held_out, seed)
    train = [e for e in examples if split.split_of(e.scene_id) == TRAIN]
    rest = [e for e in examples if split.split_of(e.scene_id) != TRAIN]
    return train, rest


def _make_optimizer(model, name: str, learning_rate: float):
    if name == "adam":
        return torch.optim.Adam(model.parameters(), lr=learning_rate)
    if name == "sgd":
        return torch.optim.SGD(model.parameters(), lr=learning_rate)
    raise ValueError(f"unknown optimizer: {name}")


def train_toy(
    examples: Sequence[FusionExample],
    model: FusionNet,
    steps: int,
    seed: int,
    learning_rate: float = 0.01,
    optimizer: str = "adam",
    batch_size: int = 8,
    held_out: float = 0.2,
) -> Tuple[FusionNet, TrainingTrace]:
    """Train with a constant step size on micro-benchmark examples.

    Batches are drawn without replacement from a seeded permutation of
    the training split; an epoch ends when the permutation runs out. The
    held-out accuracy is recorded before training, after every epoch and
    after the last step.

    Raises
    ------
    NumericError
        When a batch loss is not finite. The error carries the losses
        recorded so far.
    """
    if len(examples) < MIN_TRAINING_EXAMPLES:
        raise ValueError(
            f"need at least {MIN_TRAINING_EXAMPLES} examples, "
            f"got {len(examples)}"
        )
    if steps < 0:
        raise ValueError("steps must be non-negative")
    train, evaluation = split_examples(examples, held_out, seed)
    batch_size = min(batch_size, len(train))
    trace = TrainingTrace(n_train=len(train), n_held_out=len(evaluation))
    opt = _make_optimizer(model, optimizer, learning_rate)
    generator = torch.Generator().manual_seed(seed)

    def record(epoch: int, step: int, epoch_losses: List[float]) -> None:
        accuracy = model_accuracy(model, evaluation)
        train_loss = float(np.mean(epoch_losses)) if epoch_losses else math.nan
        trace.epochs.append(EpochRecord(epoch, step, train_loss, accuracy))
        logger.info(
            "epoch %d step %d: loss %.4f, %s",
            epoch,
            step,
            train_loss,
            ", ".join(f"Acc@{t} {a:.3f}" for t, a in accuracy.items()),
        )

    record(0, 0, [])
    order = torch.randperm(len(train), generator=generator).tolist()
    cursor = 0
    epoch = 1
    epoch_losses: List[float] = []
    for step in range(1, steps + 1):
        if cursor + batch_size > len(order):
            record(epoch, step - 1, epoch_losses)
            epoch += 1
            epoch_losses = []
            order = torch.randperm(len(train), generator=generator).tolist()
            cursor = 0
        batch = [train[i] for i in order[cursor : cursor + batch_size]]
        cursor += batch_size

        opt.zero_grad()
        loss = batch_loss(model, batch)
        value = float(loss)
        if not math.isfinite(value):
            raise NumericError(
                f"loss became non-finite at step {step}", trace=trace.losses
            )
        loss.backward()
        opt.step()
        trace.losses.append(value)
        epoch_losses.append(value)

    if steps > 0:
        record(epoch, steps, epoch_losses)
    return model, trace


def grad_check(
    model: FusionNet,
    micro_batch: Sequence[FusionExample],
    seed: int = 0,
    step: float = 1e-4,
    fraction: float = 0.01,
    min_entries: int = 20,
) -> float:
    """Worst relative error between analytic and finite-difference gradients.

    For every parameter tensor a random `fraction` of its entries, at
    least `min_entries`, is perturbed by +-step and the central difference
    of the mean total loss is compared to the autograd gradient. The
    relative error divides by max(|analytic|, |numeric|, 1e-3).
    """
    if model.dtype != torch.float64:
        raise ValueError("gradient checks need a float64 model")
    if len(micro_batch) == 0:
        raise ValueError("micro_batch must not be empty")

    def loss_value() -> float:
        value = float(batch_loss(model, micro_batch))
        if not math.isfinite(value):
            raise NumericError("loss is not finite during the gradient check")
        return value

    model.zero_grad()
    loss = batch_loss(model, micro_batch)
    if not math.isfinite(float(loss)):
        raise NumericError("loss is not finite during the gradient check")
    loss.backward()

    rng = np.random.default_rng(seed)
    worst = 0.0
    with torch.no_grad():
        for name, param in model.named_parameters():
            flat = param.view(-1)
            grad = param.grad.view(-1) if param.grad is not None else None
            size = flat.numel()
            n = min(size, max(min_entries, math.ceil(fraction * size)))
            for index in rng.choice(size, size=n, replace=False):
                original = float(flat[index])
                flat[index] = original + step
                plus = loss_value()
                flat[index] = original - step
                minus = loss_value()
                flat[index] = original
                numeric = (plus - minus) / (2 * step)
                analytic = 0.0 if grad is None else float(grad[index])
                error = abs(analytic - numeric) / max(
                    abs(analytic), abs(numeric), _GRAD_FLOOR
                )
                if error > worst:
                    logger.debug(
                        "%s[%d]: relative error %.3e", name, index, error
                    )
                worst = max(worst, error)
    return worst
