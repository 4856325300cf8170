import numpy as np
import pytest

from erupoint.geometry.bounding_box_utils import (
    Aabb,
    Ray,
    aabb_iou,
    angle_between,
    crop_cloud_with_bounding_box,
    ray_aabb_intersect,
)
from erupoint.geometry.point_cloud import PointCloud

UNIT_BOX = Aabb(min=[-0.5, -0.5, -0.5], max=[0.5, 0.5, 0.5])


def _random_box(rng: np.random.Generator) -> Aabb:
    center = rng.uniform(-3, 3, size=3)
    size = rng.uniform(0.2, 2, size=3)
    return Aabb.from_center_size(center, size)


def _monte_carlo_iou(a: Aabb, b: Aabb, n_samples: int, seed: int) -> float:
    bounds = Aabb(
        min=np.minimum(a.min, b.min), max=np.maximum(a.max, b.max)
    )
    rng = np.random.default_rng(seed)
    samples = rng.uniform(bounds.min, bounds.max, size=(n_samples, 3))
    in_a = a.contains(samples)
    in_b = b.contains(samples)
    union = np.count_nonzero(in_a | in_b)
    return np.count_nonzero(in_a & in_b) / union


def test_aabb_validation():
    with pytest.raises(ValueError):
        Aabb(min=[1, 0, 0], max=[0, 1, 1])


def test_aabb_properties():
    box = Aabb.from_points([[0, 0, 0], [1, 2, 3], [0.5, 0.5, 0.5]])
    np.testing.assert_allclose(box.center, [0.5, 1, 1.5])
    np.testing.assert_allclose(box.size, [1, 2, 3])
    assert box.volume == pytest.approx(6)
    np.testing.assert_array_equal(
        box.contains([[1, 2, 3], [1.01, 0, 0]]), [True, False]
    )
    assert box.expand(0.5).volume == pytest.approx(2 * 3 * 4)
    assert len(box.corners()) == 8
    restored = Aabb.from_dict(box.to_dict())
    np.testing.assert_array_equal(restored.min, box.min)
    np.testing.assert_array_equal(restored.max, box.max)


def test_ray_requires_unit_direction():
    with pytest.raises(ValueError):
        Ray(origin=[0, 0, 0], dir=[1, 1, 0])
    with pytest.raises(ValueError):
        Ray.through([1, 1, 1], [1, 1, 1])

    ray = Ray.through([0, 0, 0], [0, 3, 4])
    np.testing.assert_allclose(ray.dir, [0, 0.6, 0.8])


def test_ray_aabb_intersect_symmetric_case():
    ray = Ray(origin=[-1, 0, 0], dir=[1, 0, 0])
    t_near, t_far = ray_aabb_intersect(ray, UNIT_BOX)
    assert t_near == pytest.approx(0.5)
    assert t_far == pytest.approx(1.5)


def test_ray_aabb_intersect_miss():
    ray = Ray(origin=[-1, 2, 0], dir=[1, 0, 0])
    assert ray_aabb_intersect(ray, UNIT_BOX) is None


def test_ray_aabb_intersect_box_behind():
    ray = Ray(origin=[2, 0, 0], dir=[1, 0, 0])
    assert ray_aabb_intersect(ray, UNIT_BOX) is None


def test_ray_aabb_intersect_grazing():
    # runs along the top face of the box
    ray = Ray(origin=[-1, 0, 0.5], dir=[1, 0, 0])
    assert ray_aabb_intersect(ray, UNIT_BOX) is not None


def test_ray_aabb_intersect_origin_inside():
    ray = Ray(origin=[0, 0, 0], dir=[0, 0, 1])
    t_near, t_far = ray_aabb_intersect(ray, UNIT_BOX)
    assert t_near == pytest.approx(-0.5)
    assert t_far == pytest.approx(0.5)


def test_ray_aabb_intersect_sampling_oracle():
    """Hit or miss agrees with marching points along the ray."""
    rng = np.random.default_rng(42)
    t_values = np.linspace(0, 30, 10**4)
    step = t_values[1] - t_values[0]
    for _ in range(500):
        box = _random_box(rng)
        direction = rng.normal(size=3)
        # aim roughly half of the rays at the box
        if rng.uniform() < 0.5:
            direction = box.center + rng.normal(scale=0.5, size=3)
            origin = rng.uniform(-5, 5, size=3)
            direction = direction - origin
        else:
            origin = rng.uniform(-5, 5, size=3)
        ray = Ray.through(origin, origin + direction)

        interval = ray_aabb_intersect(ray, box)
        oracle_hit = bool(np.any(box.contains(ray.at(t_values))))
        if interval is None:
            assert not oracle_hit
        elif not oracle_hit:
            # the oracle can step over a chord shorter than its step
            t_near, t_far = interval
            assert t_far - max(t_near, 0) < step


def test_aabb_iou_identical_and_disjoint():
    assert aabb_iou(UNIT_BOX, UNIT_BOX) == 1.0
    far_box = Aabb.from_center_size([5, 0, 0], [1, 1, 1])
    assert aabb_iou(UNIT_BOX, far_box) == 0.0


def test_aabb_iou_degenerate_union():
    flat = Aabb(min=[0, 0, 0], max=[1, 1, 0])
    assert aabb_iou(flat, flat) == 0.0


@pytest.mark.parametrize(
    "offset,size,expected",
    [
        ([0.5, 0, 0], [1, 1, 1], 1 / 3),
        ([0.5, 0.5, 0], [1, 1, 1], 1 / 7),
        ([0.5, 0.5, 0.5], [1, 1, 1], 1 / 15),
        ([1, 0, 0], [1, 1, 1], 0.0),
        ([0, 0, 0], [0.5, 0.5, 0.5], 1 / 8),
        ([0, 0, 0], [2, 1, 1], 1 / 2),
        ([0.25, 0, 0], [0.5, 1, 1], 1 / 2),
        ([0, 0, 0.75], [1, 1, 0.5], 0.0),
        ([0, 0, 0.5], [1, 1, 1], 1 / 3),
        ([0.75, 0, 0], [1, 1, 1], 1 / 7),
    ],
)
def test_aabb_iou_closed_form(offset, size, expected):
    other = Aabb.from_center_size(offset, size)
    assert aabb_iou(UNIT_BOX, other) == pytest.approx(expected, abs=1e-12)
    assert aabb_iou(other, UNIT_BOX) == aabb_iou(UNIT_BOX, other)


def test_aabb_iou_offset_cubes_monte_carlo():
    other = Aabb.from_center_size([0.5, 0, 0], [1, 1, 1])
    estimate = _monte_carlo_iou(UNIT_BOX, other, 10**6, seed=0)
    assert estimate == pytest.approx(1 / 3, abs=1e-2)


@pytest.mark.slow
def test_aabb_iou_random_pairs_monte_carlo():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 200:
        a = _random_box(rng)
        b = Aabb.from_center_size(
            a.center + rng.normal(scale=0.5, size=3),
            rng.uniform(0.2, 2, size=3),
        )
        iou = aabb_iou(a, b)
        assert iou == aabb_iou(b, a)
        estimate = _monte_carlo_iou(a, b, 10**6, seed=checked)
        assert iou == pytest.approx(estimate, abs=1e-2)
        checked += 1


def test_angle_between():
    assert angle_between([1, 0, 0], [1, 0, 0]) == pytest.approx(0)
    assert angle_between([1, 0, 0], [-1, 0, 0]) == pytest.approx(180)
    assert angle_between([1, 0, 0], [1, 1, 0]) == pytest.approx(45)
    with pytest.raises(ValueError):
        angle_between([0, 0, 0], [1, 0, 0])


def test_crop_cloud_with_bounding_box():
    cloud = PointCloud(points=[[0, 0, 0], [2, 0, 0], [0.5, 0.5, 0.5]])
    np.testing.assert_array_equal(
        crop_cloud_with_bounding_box(cloud, UNIT_BOX), [0, 2]
    )
