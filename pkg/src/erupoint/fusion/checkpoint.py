"""Binary parameter checkpoints.

Layout, little-endian:

    magic      b"ERUNET1"
    u32        length of the JSON metadata block
    bytes      JSON metadata (network hyperparameters)
    u32        number of tensors
    per tensor:
        u16    name length, then the UTF-8 name
        u8     number of dims, then one u32 per dim
        f32    row-major values
"""
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import torch

from erupoint import constants
from erupoint.fusion.model import FusionNet

logger = logging.getLogger(__name__)


def save_checkpoint(
    model: FusionNet,
    path: Union[str, Path],
    metadata: Optional[Dict[str, Any]] = None,
) -> None:
    header = {"hparams": model.hparams, "metadata": metadata or {}}
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    state = model.state_dict()
    with open(path, "wb") as f:
        f.write(constants.CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        f.write(struct.pack("<I", len(state)))
        for name, tensor in state.items():
            encoded = name.encode("utf-8")
            values = tensor.detach().cpu().numpy().astype("<f4")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", values.ndim))
            f.write(struct.pack(f"<{values.ndim}I", *values.shape))
            f.write(values.tobytes(order="C"))
    logger.info("wrote checkpoint with %d tensors to %s", len(state), path)


def read_checkpoint(path: Union[str, Path]):
    """Hyperparameters, metadata and named float32 arrays of a checkpoint."""
    magic = constants.CHECKPOINT_MAGIC
    with open(path, "rb") as f:
        data = f.read()
    if data[: len(magic)] != magic:
        raise ValueError(f"{path} is not an ERUNET1 checkpoint")
    offset = len(magic)

    def take(n: int) -> bytes:
        nonlocal offset
        if offset + n > len(data):
            raise ValueError(f"{path} is truncated")
        chunk = data[offset : offset + n]
        offset += n
        return chunk

    (header_length,) = struct.unpack("<I", take(4))
    header = json.loads(take(header_length).decode("utf-8"))
    (n_tensors,) = struct.unpack("<I", take(4))
    tensors = {}
    for _ in range(n_tensors):
        (name_length,) = struct.unpack("<H", take(2))
        name = take(name_length).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        count = int(np.prod(shape, dtype=np.int64))
        values = np.frombuffer(take(4 * count), dtype="<f4")
        tensors[name] = values.reshape(shape)
    return header["hparams"], header["metadata"], tensors


def load_checkpoint(path: Union[str, Path]) -> FusionNet:
    """Rebuild the network of a checkpoint, in float64."""
    hparams, _, tensors = read_checkpoint(path)
    model = FusionNet(**hparams)
    state = {
        name: torch.as_tensor(values.astype(np.float64))
        for name, values in tensors.items()
    }
    model.load_state_dict(state)
    return model
