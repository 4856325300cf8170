"""The toy fusion network.

Proposal features and the gesture feature are concatenated and fused
into proposal-gesture queries, which attend to the word features through
a stack of transformer decoder layers. A head scores every proposal and a
softmax over the proposals gives the confidences.
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import torch
from torch import nn

from erupoint.config import Config
from erupoint.fusion.encoders import (
    GestureEncoder,
    GestureGroups,
    LanguageEncoder,
    ProposalEncoder,
    ProposalInputs,
    hash_tokens,
    proposal_inputs,
)
from erupoint.geometry.bounding_box_utils import Aabb
from erupoint.geometry.point_cloud import PointCloud

N_CLASSES = 18
N_SIZE_CLASSES = 8


@dataclass(frozen=True)
class FusionInput:
    gesture: GestureGroups
    token_ids: torch.Tensor
    proposals: ProposalInputs


@dataclass(frozen=True)
class FeatureBundle:
    """Branch features of one sample.

    F_p : (M, H) proposal features.
    F_g : (M, H) gesture feature broadcast over the proposals.
    F_l : (L, H) word features.
    F_l_global : (1, H) sentence feature.
    F_p_ges : (M, H) fused proposal-gesture features.
    attention : (L, L) self-attention weights of the language branch.
    """

    F_p: torch.Tensor
    F_g: torch.Tensor
    F_l: torch.Tensor
    F_l_global: torch.Tensor
    F_p_ges: torch.Tensor
    attention: torch.Tensor


@dataclass(frozen=True)
class AuxPredictions:
    """Auxiliary detection and language heads, as probabilities."""

    objectness: torch.Tensor
    sem_cls: torch.Tensor
    center_offset: torch.Tensor
    size_cls: torch.Tensor
    size_residual: torch.Tensor
    lang_cls: torch.Tensor


@dataclass(frozen=True)
class NetOutput:
    confidences: torch.Tensor
    aux: AuxPredictions
    features: FeatureBundle


class FusionNet(nn.Module):
    def __init__(
        self,
        hidden_size: int = 32,
        num_heads: int = 1,
        vocab_size: int = 4096,
        embed_dim: int = 64,
        n_classes: int = N_CLASSES,
        n_size_classes: int = N_SIZE_CLASSES,
        n_centroids: int = 64,
        group_radius: float = 0.2,
        max_group_size: int = 64,
        n_layers: int = 2,
        use_center_channels: bool = True,
    ):
        super().__init__()
        if hidden_size % num_heads != 0:
            raise ValueError("hidden_size must be divisible by num_heads")
        self.hparams: Dict[str, Any] = {
            "hidden_size": hidden_size,
            "num_heads": num_heads,
            "vocab_size": vocab_size,
            "embed_dim": embed_dim,
            "n_classes": n_classes,
            "n_size_classes": n_size_classes,
            "n_centroids": n_centroids,
            "group_radius": group_radius,
            "max_group_size": max_group_size,
            "n_layers": n_layers,
            "use_center_channels": use_center_channels,
        }
        self.hidden_size = hidden_size

        self.gesture_encoder = GestureEncoder(
            hidden_size, n_centroids, group_radius, max_group_size
        )
        self.language_encoder = LanguageEncoder(
            hidden_size, vocab_size, embed_dim, num_heads
        )
        self.proposal_encoder = ProposalEncoder(
            hidden_size, use_center_channels
        )
        self.fusion_block = nn.Sequential(
            nn.Linear(2 * hidden_size, hidden_size), nn.GELU()
        )
        self.decoder = nn.ModuleList(
            nn.TransformerDecoderLayer(
                d_model=hidden_size,
                nhead=num_heads,
                dim_feedforward=2 * hidden_size,
                dropout=0.0,
                activation="gelu",
                batch_first=True,
            )
            for _ in range(n_layers)
        )
        self.confidence_head = nn.Sequential(
            nn.Linear(hidden_size, hidden_size),
            nn.GELU(),
            nn.Linear(hidden_size, 1),
        )
        self.objectness_head = nn.Linear(hidden_size, 2)
        self.sem_cls_head = nn.Linear(hidden_size, n_classes)
        self.center_head = nn.Linear(hidden_size, 3)
        self.size_cls_head = nn.Linear(hidden_size, n_size_classes)
        self.size_residual_head = nn.Linear(hidden_size, 3)
        self.lang_cls_head = nn.Linear(hidden_size, n_classes)
        self.to(torch.float64)

    @classmethod
    def from_config(cls, config: Config, **kwargs) -> "FusionNet":
        params = {
            "hidden_size": config.hidden_size,
            "num_heads": config.num_heads,
            "vocab_size": config.vocab_size,
            "embed_dim": config.embed_dim,
        }
        params.update(kwargs)
        return cls(**params)

    @property
    def dtype(self) -> torch.dtype:
        return next(self.parameters()).dtype

    def encode(self, inputs: FusionInput) -> FeatureBundle:
        F_g = self.gesture_encoder(inputs.gesture)
        F_l, F_l_global, attention = self.language_encoder(inputs.token_ids)
        F_p = self.proposal_encoder(inputs.proposals)
        F_g = F_g.expand(len(F_p), -1)
        F_p_ges = self.fusion_block(torch.cat([F_p, F_g], dim=-1))
        return FeatureBundle(
            F_p=F_p,
            F_g=F_g,
            F_l=F_l,
            F_l_global=F_l_global,
            F_p_ges=F_p_ges,
            attention=attention,
        )

    def decode(self, F_p_ges: torch.Tensor, F_l: torch.Tensor) -> torch.Tensor:
        """Proposal confidences, a softmax over the M proposals."""
        queries = F_p_ges[None]
        memory = F_l[None]
        for layer in self.decoder:
            queries = layer(queries, memory)
        logits = self.confidence_head(queries[0]).squeeze(-1)
        return torch.softmax(logits, dim=0)

    def fuse(
        self, F_p: torch.Tensor, F_g: torch.Tensor, F_l: torch.Tensor
    ) -> torch.Tensor:
        _check_features(F_p, F_g, F_l, self.hidden_size)
        F_g = F_g.expand(len(F_p), -1)
        F_p_ges = self.fusion_block(torch.cat([F_p, F_g], dim=-1))
        return self.decode(F_p_ges, F_l)

    def auxiliary(self, features: FeatureBundle) -> AuxPredictions:
        return AuxPredictions(
            objectness=torch.softmax(self.objectness_head(features.F_p), -1),
            sem_cls=torch.softmax(self.sem_cls_head(features.F_p), -1),
            center_offset=self.center_head(features.F_p),
            size_cls=torch.softmax(self.size_cls_head(features.F_p), -1),
            size_residual=self.size_residual_head(features.F_p),
            lang_cls=torch.softmax(
                self.lang_cls_head(features.F_l_global[0]), -1
            ),
        )

    def forward(self, inputs: FusionInput) -> NetOutput:
        features = self.encode(inputs)
        confidences = self.decode(features.F_p_ges, features.F_l)
        return NetOutput(
            confidences=confidences,
            aux=self.auxiliary(features),
            features=features,
        )


def _check_features(F_p, F_g, F_l, hidden_size: int) -> None:
    if F_p.ndim != 2 or F_l.ndim != 2 or F_g.ndim != 2:
        raise ValueError("features must be two-dimensional")
    for name, value in (("F_p", F_p), ("F_g", F_g), ("F_l", F_l)):
        if value.shape[1] != hidden_size:
            raise ValueError(
                f"{name} has width {value.shape[1]}, expected {hidden_size}"
            )
    if len(F_p) == 0:
        raise ValueError("need at least one proposal")
    if len(F_g) not in (1, len(F_p)):
        raise ValueError("F_g must have one row or one row per proposal")


def encode_gesture(cloud: PointCloud, model: FusionNet) -> torch.Tensor:
    """Encode an agent cloud with one set abstraction level.

    Parameters
    ----------
    cloud : PointCloud
        The agent cloud, with normals.
    model : FusionNet
        Network whose gesture encoder is used.

    Returns
    -------
    F_g : torch.Tensor
        (1, H) gesture feature.
    """
    groups = model.gesture_encoder.group(cloud, model.dtype)
    return model.gesture_encoder(groups)


def encode_language(
    tokens: Sequence[str], model: FusionNet
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Encode a description with the GRU and self-attention encoder.

    Parameters
    ----------
    tokens : sequence of str
        Description tokens; hashed into the model's vocabulary.
    model : FusionNet
        Network whose language encoder is used.

    Returns
    -------
    F_l : torch.Tensor
        (L, H) word features.
    F_l_global : torch.Tensor
        (1, H) sentence feature.
    """
    token_ids = hash_tokens(tokens, model.hparams["vocab_size"])
    F_l, F_l_global, _ = model.language_encoder(token_ids)
    return F_l, F_l_global


def encode_proposals(
    cloud: PointCloud,
    boxes: Sequence[Aabb],
    model: FusionNet,
    frame=None,
) -> torch.Tensor:
    """Encode the scene points inside each proposal box.

    Parameters
    ----------
    cloud : PointCloud
        Scene cloud with colors.
    boxes : sequence of Aabb
        Proposal boxes; a box without points is encoded from its geometry.
    model : FusionNet
        Network whose proposal encoder is used.
    frame : RigidTransform, optional
        World to agent frame; the boxes stay in world coordinates when
        omitted.

    Returns
    -------
    F_p : torch.Tensor
        (M, H) proposal features.
    """
    proposals = proposal_inputs(cloud, boxes, frame=frame, dtype=model.dtype)
    return model.proposal_encoder(proposals)


def fuse(
    F_p: torch.Tensor,
    F_g: torch.Tensor,
    F_l: torch.Tensor,
    model: FusionNet,
) -> torch.Tensor:
    """Fuse proposal, gesture and language features into confidences.

    Parameters
    ----------
    F_p : torch.Tensor
        (M, H) proposal features.
    F_g : torch.Tensor
        (1, H) gesture feature, broadcast over the proposals.
    F_l : torch.Tensor
        (L, H) word features attended to by the decoder.
    model : FusionNet
        Network whose fusion layers are used.

    Returns
    -------
    confidences : torch.Tensor
        (M,) softmax over the proposals.

    Raises
    ------
    ValueError
        When the feature widths do not match the model.
    """
    return model.fuse(F_p, F_g, F_l)


def build_model(config: Optional[Config] = None, seed: int = 0, **kwargs):
    """A freshly initialized network; the seed fixes the initial weights."""
    config = config or Config()
    torch.manual_seed(seed)
    return FusionNet.from_config(config, **kwargs)
