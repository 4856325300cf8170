from erupoint.fusion.checkpoint import load_checkpoint, save_checkpoint
from erupoint.fusion.features import (
    FusionExample,
    LossTargets,
    build_example,
    build_examples,
    fusion_input,
    synthetic_example,
)
from erupoint.fusion.loss import (
    LossBreakdown,
    compose_box,
    compose_det,
    compose_total,
    compute_loss,
)
from erupoint.fusion.model import (
    FeatureBundle,
    FusionInput,
    FusionNet,
    build_model,
    encode_gesture,
    encode_language,
    encode_proposals,
    fuse,
)
from erupoint.fusion.training import (
    TrainingTrace,
    grad_check,
    model_accuracy,
    train_toy,
)

__all__ = (
    "FeatureBundle",
    "FusionExample",
    "FusionInput",
    "LossBreakdown",
    "LossTargets",
    "FusionNet",
    "TrainingTrace",
    "build_example",
    "build_examples",
    "build_model",
    "compose_box",
    "compose_det",
    "compose_total",
    "compute_loss",
    "encode_gesture",
    "encode_language",
    "encode_proposals",
    "fuse",
    "fusion_input",
    "grad_check",
    "load_checkpoint",
    "model_accuracy",
    "save_checkpoint",
    "synthetic_example",
    "train_toy",
)
