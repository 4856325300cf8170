import struct
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np
from plyfile import PlyData, PlyElement

from erupoint.constants import ERUPC_MAGIC
from erupoint.geometry.point_cloud import PointCloud

PathLike = Union[str, Path]

_COLOR_FIELDS = ("red", "green", "blue")
_NORMAL_FIELDS = ("nx", "ny", "nz")


def read_ply(path: PathLike) -> PointCloud:
    """Read the vertex element of a PLY file.

    Colors are read from red/green/blue (uchar, scaled to [0, 1]) and
    normals from nx/ny/nz when present.

    Parameters
    ----------
    path : str or Path
        ASCII or binary PLY file with a vertex element.

    Returns
    -------
    pc : PointCloud
        The vertices in file order.
    """
    with open(path, "rb") as file_in:
        plydata = PlyData.read(file_in)
    vertex = plydata["vertex"].data
    names = vertex.dtype.names
    points = np.stack([vertex["x"], vertex["y"], vertex["z"]], axis=1)

    colors = None
    if all(name in names for name in _COLOR_FIELDS):
        colors = np.stack([vertex[c] for c in _COLOR_FIELDS], axis=1)
        colors = colors.astype(float) / 255.0

    normals = None
    if all(name in names for name in _NORMAL_FIELDS):
        normals = np.stack([vertex[n] for n in _NORMAL_FIELDS], axis=1)
        normals = _renormalize(normals.astype(float))

    return PointCloud(points=points.astype(float), colors=colors, normals=normals)


def write_ply(pc: PointCloud, path: PathLike, text: bool = True) -> None:
    """Write a cloud as a PLY vertex element.

    Parameters
    ----------
    pc : PointCloud
        Cloud to write; colors and normals are written when present.
    path : str or Path
        Output file.
    text : bool
        ASCII when True, binary little-endian otherwise.
    """
    dtype = [("x", "f4"), ("y", "f4"), ("z", "f4")]
    if pc.colors is not None:
        dtype += [(c, "u1") for c in _COLOR_FIELDS]
    if pc.normals is not None:
        dtype += [(n, "f4") for n in _NORMAL_FIELDS]

    vertices = np.empty(len(pc), dtype=dtype)
    for axis, name in enumerate("xyz"):
        vertices[name] = pc.points[:, axis]
    if pc.colors is not None:
        scaled = np.round(pc.colors * 255).astype(np.uint8)
        for axis, name in enumerate(_COLOR_FIELDS):
            vertices[name] = scaled[:, axis]
    if pc.normals is not None:
        for axis, name in enumerate(_NORMAL_FIELDS):
            vertices[name] = pc.normals[:, axis]

    element = PlyElement.describe(vertices, "vertex")
    PlyData([element], text=text).write(str(path))


def write_erupc_block(pc: PointCloud, f: BinaryIO) -> None:
    """Write a cloud in the binary ERUPC layout to an open file.

    Layout (little-endian): magic, u32 count, f32 xyz triples, then for
    colors and normals a u8 presence flag followed by f32 triples.
    """
    f.write(ERUPC_MAGIC)
    f.write(struct.pack("<I", len(pc)))
    f.write(pc.points.astype("<f4").tobytes())
    for feature in (pc.colors, pc.normals):
        if feature is None:
            f.write(struct.pack("<B", 0))
        else:
            f.write(struct.pack("<B", 1))
            f.write(feature.astype("<f4").tobytes())


def read_erupc_block(f: BinaryIO) -> PointCloud:
    """Read one ERUPC cloud from an open file."""
    magic = f.read(len(ERUPC_MAGIC))
    if magic != ERUPC_MAGIC:
        raise ValueError(f"bad point cloud magic: {magic!r}")
    (count,) = struct.unpack("<I", _read_exact(f, 4))
    points = _read_triples(f, count)
    features = []
    for _ in range(2):
        (present,) = struct.unpack("<B", _read_exact(f, 1))
        features.append(_read_triples(f, count) if present else None)
    colors, normals = features
    if colors is not None:
        colors = np.clip(colors, 0.0, 1.0)
    if normals is not None:
        normals = _renormalize(normals)
    return PointCloud(points=points, colors=colors, normals=normals)


def write_erupc(pc: PointCloud, path: PathLike) -> None:
    with open(path, "wb") as f:
        write_erupc_block(pc, f)


def read_erupc(path: PathLike) -> PointCloud:
    with open(path, "rb") as f:
        return read_erupc_block(f)


def read_point_cloud(path: PathLike) -> PointCloud:
    """Read a cloud from a .ply or ERUPC file, chosen by suffix."""
    if Path(path).suffix.lower() == ".ply":
        return read_ply(path)
    return read_erupc(path)


def _read_exact(f: BinaryIO, n: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise ValueError("unexpected end of point cloud data")
    return data


def _read_triples(f: BinaryIO, count: int) -> np.ndarray:
    data = _read_exact(f, 12 * count)
    return np.frombuffer(data, dtype="<f4").reshape(count, 3).astype(float)


def _renormalize(normals: np.ndarray) -> np.ndarray:
    # f32 storage loses the unit length; zero rows stay zero
    lengths = np.linalg.norm(normals, axis=1)
    nonzero = lengths > 0
    normals[nonzero] /= lengths[nonzero, None]
    return normals
