import numpy as np
import pytest

from erupoint.geometry.io import (
    read_erupc,
    read_ply,
    read_point_cloud,
    write_erupc,
    write_ply,
)
from erupoint.geometry.point_cloud import PointCloud


def _make_cloud() -> PointCloud:
    rng = np.random.default_rng(3)
    normals = rng.normal(size=(20, 3))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    normals[-1] = 0
    return PointCloud(
        points=rng.uniform(-2, 2, size=(20, 3)),
        colors=rng.integers(0, 256, size=(20, 3)) / 255.0,
        normals=normals,
    )


def test_ply_round_trip(tmp_path):
    cloud = _make_cloud()
    path = tmp_path / "cloud.ply"
    write_ply(cloud, path)

    loaded = read_ply(path)
    np.testing.assert_allclose(loaded.points, cloud.points, atol=1e-6)
    np.testing.assert_allclose(loaded.colors, cloud.colors, atol=1e-9)
    np.testing.assert_allclose(loaded.normals, cloud.normals, atol=1e-6)


def test_ply_without_features(tmp_path):
    cloud = PointCloud(points=[[0, 0, 0], [1, 2, 3]])
    path = tmp_path / "plain.ply"
    write_ply(cloud, path, text=False)

    loaded = read_point_cloud(path)
    assert loaded.colors is None
    assert loaded.normals is None
    np.testing.assert_allclose(loaded.points, cloud.points)


def test_erupc_round_trip(tmp_path):
    cloud = _make_cloud()
    path = tmp_path / "cloud.erupc"
    write_erupc(cloud, path)

    with open(path, "rb") as f:
        assert f.read(6) == b"ERUPC\x00"

    loaded = read_point_cloud(path)
    np.testing.assert_allclose(loaded.points, cloud.points, atol=1e-6)
    np.testing.assert_allclose(loaded.normals, cloud.normals, atol=1e-6)
    # padding normals stay zero
    np.testing.assert_array_equal(loaded.normals[-1], [0, 0, 0])


def test_erupc_bad_magic(tmp_path):
    path = tmp_path / "bad.erupc"
    path.write_bytes(b"NOTPC\x00" + bytes(8))
    with pytest.raises(ValueError):
        read_erupc(path)


def test_erupc_truncated(tmp_path):
    path = tmp_path / "short.erupc"
    write_erupc(_make_cloud(), path)
    path.write_bytes(path.read_bytes()[:40])
    with pytest.raises(ValueError):
        read_erupc(path)
