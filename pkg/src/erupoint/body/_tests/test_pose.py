import math

import numpy as np
import pytest

from erupoint.body.human_model import build_human
from erupoint.body.pose import (
    DEFAULT_GRID,
    ElevationGrid,
    Pose,
    Side,
    draw_perturbation,
    pointing_landmarks,
    pose_pointing,
    solve_elevation,
)
from erupoint.geometry.bounding_box_utils import angle_between

ZERO_PERTURB = {"upper_arm": 0, "lower_arm": 0, "hand": 0, "head": 0}


@pytest.fixture(scope="module")
def model():
    return build_human(0, seed=0)


def test_elevation_grid():
    assert DEFAULT_GRID.size == 360
    assert DEFAULT_GRID.index(-90) == 0
    assert DEFAULT_GRID.index(89.5) == 359
    assert DEFAULT_GRID.value(180) == 0
    assert DEFAULT_GRID.snap(0.3) == 0.5
    assert DEFAULT_GRID.snap(120) == 89.5
    with pytest.raises(ValueError):
        DEFAULT_GRID.index(0.25)
    with pytest.raises(ValueError):
        DEFAULT_GRID.index(90)
    with pytest.raises(ValueError):
        ElevationGrid(step=0.7)


def test_side_parse():
    assert Side.parse("LEFT") is Side.LEFT
    assert Side.parse(1) is Side.RIGHT
    assert Side.RIGHT.suffix == "_R"


def test_pose_validation():
    pose = Pose(side="left", elevation=10)
    assert pose.perturb == ZERO_PERTURB
    with pytest.raises(ValueError):
        Pose(side="left", elevation=0, perturb={"foot": 1})
    with pytest.raises(ValueError):
        Pose(side="left", elevation=0, perturb={"hand": 3.5})


def test_draw_perturbation_bounds():
    values = np.array(
        [list(draw_perturbation(seed).values()) for seed in range(100)]
    )
    assert np.all(np.abs(values) <= 3)
    # a truncated gaussian with sigma 1.5 spreads over the range
    assert 1.0 < values.std() < 1.8


def test_horizontal_arm(model):
    agent = pose_pointing(model, "right", 0.0, seed=0, perturb=ZERO_PERTURB)
    shoulder = model.joints["shoulder_R"]
    assert agent.fingertip[2] == pytest.approx(shoulder[2], abs=0.01)


@pytest.mark.parametrize("side", ["left", "right"])
@pytest.mark.parametrize("elevation", [-90, -45.5, -10, 0, 20, 60.5, 89.5])
def test_sagittal_arm_elevation(model, side, elevation):
    pose = Pose(side=side, elevation=elevation, perturb=ZERO_PERTURB)
    joints = pointing_landmarks(model, pose)
    arm = joints["fingertip" + pose.side.suffix] - joints[
        "shoulder" + pose.side.suffix
    ]
    sagittal = arm * [0, 1, 1]
    assert angle_between(sagittal, [0, 1, 0]) == pytest.approx(
        abs(elevation), abs=1e-6
    )
    # the fingertip ends on the body midline
    assert joints["fingertip" + pose.side.suffix][0] == pytest.approx(
        0, abs=1e-9
    )


def test_pose_pointing_cloud(model):
    agent = pose_pointing(model, "left", 35.5, seed=4)
    assert len(agent.cloud) == 3000
    assert agent.cloud.colors is None
    assert agent.landmarks_in_bounds()
    assert all(abs(v) <= 3 for v in agent.pose.perturb.values())
    assert agent.pose.side is Side.LEFT


def test_pose_pointing_is_deterministic(model):
    first = pose_pointing(model, "right", -20, seed=9)
    second = pose_pointing(model, "right", -20, seed=9)
    np.testing.assert_array_equal(first.cloud.points, second.cloud.points)
    np.testing.assert_array_equal(first.eye, second.eye)


def test_pose_pointing_off_grid(model):
    with pytest.raises(ValueError):
        pose_pointing(model, "right", 10.2, seed=0)


@pytest.mark.parametrize("ray_elevation", [-60, -25, 0, 15, 45])
def test_solve_elevation(model, ray_elevation):
    arm_elevation = solve_elevation(model, ray_elevation)
    # off-grid elevations are fine for the landmarks
    pose = Pose(side="right", elevation=arm_elevation, perturb=ZERO_PERTURB)
    joints = pointing_landmarks(model, pose)
    line = joints["fingertip_R"] - joints["eye"]
    assert line[1] > 0
    assert math.degrees(math.atan2(line[2], line[1])) == pytest.approx(
        ray_elevation, abs=1e-6
    )
