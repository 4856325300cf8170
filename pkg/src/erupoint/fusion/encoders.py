"""Encoders of the gesture, language and proposal branches.

The gesture encoder is a single set-abstraction stage: farthest point
sampling picks centroids, a ball query groups their neighbors, and a
shared perceptron with max pooling summarizes each group. Grouping runs
once in numpy; only the perceptrons are differentiable.
"""
import zlib
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import torch
from sklearn.neighbors import NearestNeighbors
from torch import nn

from erupoint.geometry.bounding_box_utils import (
    Aabb,
    crop_cloud_with_bounding_box,
)
from erupoint.geometry.point_cloud import PointCloud
from erupoint.geometry.transforms import RigidTransform

MAX_TOKENS = 126

# box centers are divided by this before entering the network (meters)
CENTER_SCALE = 4.0

# points pooled per proposal
MAX_PROPOSAL_POINTS = 256


def farthest_point_sample(points: np.ndarray, n_samples: int) -> np.ndarray:
    """Indices of up to n_samples points spread by farthest point sampling.

    The first pick is the point farthest from the centroid; each next pick
    maximizes the distance to the picks so far. Ties go to the lowest index.
    """
    n_points = len(points)
    if n_points == 0:
        raise ValueError("cannot sample from an empty cloud")
    n_samples = min(n_samples, n_points)

    indices = np.empty(n_samples, dtype=np.int64)
    distance = np.full(n_points, np.inf)
    offsets = points - points.mean(axis=0)
    farthest = int(np.argmax(np.einsum("ij,ij->i", offsets, offsets)))
    for i in range(n_samples):
        indices[i] = farthest
        delta = points - points[farthest]
        distance = np.minimum(distance, np.einsum("ij,ij->i", delta, delta))
        farthest = int(np.argmax(distance))
    return indices


def ball_group(
    points: np.ndarray,
    centroid_index: np.ndarray,
    radius: float,
    max_group_size: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest neighbors of each centroid, masked to the ball radius.

    Returns
    -------
    group_index : (G, K) int array
        Neighbor indices, nearest first.
    group_mask : (G, K) bool array
        True where the neighbor lies within `radius`. The centroid itself
        is always in its group.
    """
    k = min(max_group_size, len(points))
    neighbors = NearestNeighbors(n_neighbors=k).fit(points)
    distances, group_index = neighbors.kneighbors(points[centroid_index])
    group_mask = distances <= radius
    group_mask[:, 0] = True
    return group_index, group_mask


def hash_tokens(tokens: Sequence[str], vocab_size: int) -> torch.Tensor:
    """Embedding-table rows of the tokens."""
    if len(tokens) == 0:
        raise ValueError("tokens must not be empty")
    if len(tokens) > MAX_TOKENS:
        raise ValueError(
            f"at most {MAX_TOKENS} tokens are supported, got {len(tokens)}"
        )
    ids = [zlib.crc32(token.encode("utf-8")) % vocab_size for token in tokens]
    return torch.tensor(ids, dtype=torch.long)


@dataclass(frozen=True)
class GestureGroups:
    xyz: torch.Tensor
    normals: torch.Tensor
    centroid_index: torch.Tensor
    group_index: torch.Tensor
    group_mask: torch.Tensor


def group_gesture_points(
    cloud: PointCloud,
    n_centroids: int,
    radius: float,
    max_group_size: int,
    dtype: torch.dtype = torch.float64,
) -> GestureGroups:
    if len(cloud) == 0:
        raise ValueError("the agent cloud is empty")
    points = cloud.points
    normals = cloud.normals
    if normals is None:
        normals = np.zeros_like(points)
    centroid_index = farthest_point_sample(points, n_centroids)
    group_index, group_mask = ball_group(
        points, centroid_index, radius, max_group_size
    )
    return GestureGroups(
        xyz=torch.as_tensor(points, dtype=dtype),
        normals=torch.as_tensor(normals, dtype=dtype),
        centroid_index=torch.as_tensor(centroid_index),
        group_index=torch.as_tensor(group_index),
        group_mask=torch.as_tensor(group_mask),
    )


@dataclass(frozen=True)
class ProposalInputs:
    """Pooled point features and box geometry of M proposals.

    points : (M, K, 6) centered coordinates and colors, zero padded.
    mask : (M, K) valid points.
    geometry : (M, 6) scaled box center and box size.
    empty : (M,) proposals without any contained point.
    """

    points: torch.Tensor
    mask: torch.Tensor
    geometry: torch.Tensor
    empty: torch.Tensor

    def __len__(self) -> int:
        return len(self.geometry)


def proposal_inputs(
    cloud: PointCloud,
    boxes: Sequence[Aabb],
    frame: Optional[RigidTransform] = None,
    max_points: int = MAX_PROPOSAL_POINTS,
    dtype: torch.dtype = torch.float64,
) -> ProposalInputs:
    """Crop the cloud with every box and express the crops in `frame`.

    Boxes are cropped in the cloud's own frame; coordinates, centers and
    sizes are then moved by `frame` (identity when None). Crops larger
    than max_points are thinned to evenly spaced indices.
    """
    if len(boxes) == 0:
        raise ValueError("need at least one proposal box")
    if frame is None:
        frame = RigidTransform.identity()
    colors = cloud.colors
    if colors is None:
        colors = np.zeros_like(cloud.points)

    crops = []
    geometry = np.empty((len(boxes), 6))
    for i, box in enumerate(boxes):
        indices = crop_cloud_with_bounding_box(cloud, box)
        if len(indices) > max_points:
            indices = indices[
                np.linspace(0, len(indices) - 1, max_points).astype(int)
            ]
        local = frame.apply_vectors(cloud.points[indices] - box.center)
        crops.append(np.concatenate([local, colors[indices]], axis=1))
        moved = box.transformed(frame.rotation, frame.translation)
        geometry[i, :3] = moved.center / CENTER_SCALE
        geometry[i, 3:] = moved.size

    width = max(1, max(len(crop) for crop in crops))
    points = np.zeros((len(boxes), width, 6))
    mask = np.zeros((len(boxes), width), dtype=bool)
    for i, crop in enumerate(crops):
        points[i, : len(crop)] = crop
        mask[i, : len(crop)] = True
    return ProposalInputs(
        points=torch.as_tensor(points, dtype=dtype),
        mask=torch.as_tensor(mask),
        geometry=torch.as_tensor(geometry, dtype=dtype),
        empty=torch.as_tensor(~mask.any(axis=1)),
    )


def _perceptron(in_features: int, hidden_size: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Linear(in_features, hidden_size),
        nn.GELU(),
        nn.Linear(hidden_size, hidden_size),
        nn.GELU(),
    )


def _masked_max(features: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Max over dim 1 of the masked entries; rows with no entry give 0."""
    pooled = features.masked_fill(~mask[..., None], float("-inf")).amax(dim=1)
    empty = ~mask.any(dim=1)
    return torch.where(empty[:, None], torch.zeros_like(pooled), pooled)


class GestureEncoder(nn.Module):
    def __init__(
        self,
        hidden_size: int,
        n_centroids: int = 64,
        radius: float = 0.2,
        max_group_size: int = 64,
    ):
        super().__init__()
        self.n_centroids = n_centroids
        self.radius = radius
        self.max_group_size = max_group_size
        self.mlp = _perceptron(6, hidden_size)
        self.projection = nn.Linear(hidden_size + 3, hidden_size)

    def group(self, cloud: PointCloud, dtype: torch.dtype) -> GestureGroups:
        return group_gesture_points(
            cloud, self.n_centroids, self.radius, self.max_group_size, dtype
        )

    def forward(self, groups: GestureGroups) -> torch.Tensor:
        centroids = groups.xyz[groups.centroid_index]
        relative = groups.xyz[groups.group_index] - centroids[:, None]
        features = torch.cat(
            [relative, groups.normals[groups.group_index]], dim=-1
        )
        features = _masked_max(self.mlp(features), groups.group_mask)
        features = torch.cat([features, centroids], dim=-1)
        return self.projection(features.amax(dim=0, keepdim=True))


class LanguageEncoder(nn.Module):
    """Hashed word embeddings, a GRU and self-attention over its states."""

    def __init__(
        self,
        hidden_size: int,
        vocab_size: int = 4096,
        embed_dim: int = 64,
        num_heads: int = 1,
    ):
        super().__init__()
        self.vocab_size = vocab_size
        self.embedding = nn.Embedding(vocab_size, embed_dim)
        self.gru = nn.GRU(embed_dim, hidden_size, batch_first=True)
        self.attention = nn.MultiheadAttention(
            hidden_size, num_heads, batch_first=True
        )

    def forward(
        self, token_ids: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Word features (L, H), sentence feature (1, H), attention (L, L)."""
        if token_ids.numel() == 0:
            raise ValueError("tokens must not be empty")
        embedded = self.embedding(token_ids)[None]
        hidden, last = self.gru(embedded)
        words, weights = self.attention(
            hidden, hidden, hidden, need_weights=True
        )
        return words[0], last[0], weights[0]


class ProposalEncoder(nn.Module):
    def __init__(self, hidden_size: int, use_center_channels: bool = True):
        super().__init__()
        self.use_center_channels = use_center_channels
        self.mlp = _perceptron(6, hidden_size)
        self.projection = nn.Linear(hidden_size + 6, hidden_size)

    def forward(self, proposals: ProposalInputs) -> torch.Tensor:
        features = _masked_max(self.mlp(proposals.points), proposals.mask)
        geometry = proposals.geometry
        if not self.use_center_channels:
            geometry = torch.cat(
                [torch.zeros_like(geometry[:, :3]), geometry[:, 3:]], dim=1
            )
        return self.projection(torch.cat([features, geometry], dim=-1))
