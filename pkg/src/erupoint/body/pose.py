import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Mapping, Optional, Union

import numpy as np
from scipy.stats import truncnorm
from trimesh.geometry import align_vectors

from erupoint import constants
from erupoint.body.human_model import HumanModel
from erupoint.geometry.bounding_box_utils import Aabb
from erupoint.geometry.point_cloud import (
    PointCloud,
    concatenate,
    resample_fixed,
    voxel_downsample,
)
from erupoint.geometry.transforms import X_AXIS, RigidTransform
from erupoint.utils import derive_seed

# rest direction of a hanging arm
_DOWN = np.array([0.0, 0.0, -1.0])


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def suffix(self) -> str:
        return "_L" if self is Side.LEFT else "_R"

    @property
    def index(self) -> int:
        return constants.SIDES.index(self.value)

    @classmethod
    def parse(cls, value: Union["Side", str, int]) -> "Side":
        if isinstance(value, Side):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(constants.SIDES[int(value)])
        return cls(str(value).lower())


@dataclass(frozen=True)
class ElevationGrid:
    """Quantized arm elevations: [-90, 90) in steps of `step` degrees."""

    step: float = constants.ELEVATION_STEP

    def __post_init__(self):
        steps = 180.0 / self.step
        if self.step <= 0 or not math.isclose(steps, round(steps)):
            raise ValueError("elevation step must divide 180 evenly")

    @property
    def size(self) -> int:
        return int(round(180.0 / self.step))

    def value(self, index: int) -> float:
        return constants.ELEVATION_MIN + index * self.step

    def index(self, elevation: float) -> int:
        """Grid index of an on-grid elevation; off-grid raises ValueError."""
        position = (elevation - constants.ELEVATION_MIN) / self.step
        index = int(round(position))
        if abs(position - index) > 1e-9 or not 0 <= index < self.size:
            raise ValueError(f"elevation {elevation} is not on the grid")
        return index

    def snap(self, elevation: float) -> float:
        """Nearest grid elevation, clipped to the grid range."""
        position = (elevation - constants.ELEVATION_MIN) / self.step
        index = int(np.clip(round(position), 0, self.size - 1))
        return self.value(index)


DEFAULT_GRID = ElevationGrid()


@dataclass(frozen=True)
class Pose:
    """A pointing pose: arm side, quantized elevation and segment
    perturbations in degrees."""

    side: Side
    elevation: float
    perturb: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "side", Side.parse(self.side))
        perturb = {name: 0.0 for name in constants.PERTURB_SEGMENTS}
        for name, value in self.perturb.items():
            if name not in perturb:
                raise ValueError(f"unknown perturbation segment: {name}")
            if abs(value) > constants.PERTURB_RANGE + 1e-12:
                raise ValueError(f"perturbation {name}={value} out of range")
            perturb[name] = float(value)
        object.__setattr__(self, "perturb", perturb)


@dataclass(frozen=True)
class PosedAgent:
    """A posed human point cloud with its pointing landmarks."""

    cloud: PointCloud
    eye: np.ndarray
    fingertip: np.ndarray
    pose: Pose
    profile_id: int

    def transformed(self, transform: RigidTransform) -> "PosedAgent":
        return PosedAgent(
            cloud=transform.apply_cloud(self.cloud),
            eye=transform.apply(self.eye),
            fingertip=transform.apply(self.fingertip),
            pose=self.pose,
            profile_id=self.profile_id,
        )

    def landmarks_in_bounds(self, margin: float = 0.05) -> bool:
        """Whether eye and fingertip lie in the cloud's expanded bounds."""
        box = Aabb.from_points(self.cloud.points).expand(margin)
        return bool(np.all(box.contains(np.stack([self.eye, self.fingertip]))))


def draw_perturbation(
    seed: Union[int, np.random.Generator],
    sigma: float = constants.PERTURB_SIGMA,
    bound: float = constants.PERTURB_RANGE,
) -> Dict[str, float]:
    """Truncated-Gaussian perturbation angles for each posed segment."""
    rng = np.random.default_rng(seed)
    limit = bound / sigma
    values = truncnorm.rvs(
        -limit,
        limit,
        scale=sigma,
        size=len(constants.PERTURB_SEGMENTS),
        random_state=rng,
    )
    values = np.clip(values, -bound, bound)
    return dict(zip(constants.PERTURB_SEGMENTS, values.tolist()))


def pointing_direction(model: HumanModel, side: Side) -> np.ndarray:
    """Horizontal rest direction of the pointing arm.

    The arm reaches forward and inward so the fingertip sits on the body
    midline, in the sagittal plane through the eye.
    """
    arm = model.arm_length
    offset = model.shoulder_offset
    lateral = offset if side is Side.LEFT else -offset
    return np.array([lateral, math.sqrt(arm**2 - offset**2), 0.0]) / arm


def forward_kinematics(
    model: HumanModel, pose: Pose
) -> Dict[str, RigidTransform]:
    """Transform of the segment ending at each joint, rest -> posed.

    The pointing arm is rotated from hanging down to its pointing direction,
    elevated about the body-lateral axis at the shoulder, then each segment
    (upper arm, lower arm, hand, head) is flexed by its perturbation about
    the lateral axis through its proximal joint.
    """
    joints = model.joints
    side = pose.side.suffix
    transforms = {name: RigidTransform.identity() for name in joints}

    shoulder = joints["shoulder" + side]
    align = align_vectors(_DOWN, pointing_direction(model, pose.side))[:3, :3]
    to_pointing = RigidTransform(
        rotation=align, translation=shoulder - align @ shoulder
    )
    upper = (
        RigidTransform.about_axis(
            pose.elevation + pose.perturb["upper_arm"], X_AXIS, shoulder
        )
        @ to_pointing
    )
    elbow = upper.apply(joints["elbow" + side])
    lower = RigidTransform.about_axis(pose.perturb["lower_arm"], X_AXIS, elbow) @ upper
    wrist = lower.apply(joints["wrist" + side])
    hand = RigidTransform.about_axis(pose.perturb["hand"], X_AXIS, wrist) @ lower

    transforms["elbow" + side] = upper
    transforms["wrist" + side] = lower
    transforms["fingertip" + side] = hand

    head = RigidTransform.about_axis(
        pose.perturb["head"], X_AXIS, joints["spine_top"]
    )
    transforms["head"] = head
    transforms["eye"] = head
    return transforms


def pointing_landmarks(model: HumanModel, pose: Pose) -> Dict[str, np.ndarray]:
    """Posed joint positions, without building the point cloud."""
    transforms = forward_kinematics(model, pose)
    return {
        name: transforms[name].apply(position)
        for name, position in model.joints.items()
    }


def pose_pointing(
    model: HumanModel,
    side: Union[Side, str],
    elevation: float,
    seed: int,
    perturb: Optional[Mapping[str, float]] = None,
    grid: ElevationGrid = DEFAULT_GRID,
    voxel_size: float = constants.VOXEL_SIZE,
    n_points: int = constants.AGENT_POINTS,
    sigma: float = constants.PERTURB_SIGMA,
    bound: float = constants.PERTURB_RANGE,
) -> PosedAgent:
    """Pose a model pointing with one arm at the given elevation.

    Parameters
    ----------
    model : HumanModel
        The body to pose.
    side : Side
        Which arm points.
    elevation : float
        Arm elevation in degrees on the grid: -90 is hanging down, 0 is
        horizontal, +90 is straight up.
    seed : int
        Seed for the perturbation draw and the point resampling.
    perturb : mapping, optional
        Explicit perturbation angles; drawn when omitted.

    Returns
    -------
    agent : PosedAgent
        The posed body as a cloud of exactly `n_points` points with normals.
    """
    grid.index(elevation)
    if perturb is None:
        perturb = draw_perturbation(seed, sigma=sigma, bound=bound)
    pose = Pose(side=Side.parse(side), elevation=elevation, perturb=dict(perturb))
    transforms = forward_kinematics(model, pose)

    posed_parts = [
        transforms[part.bone[1]].apply_cloud(part.cloud) for part in model.parts
    ]
    cloud = voxel_downsample(concatenate(posed_parts), voxel_size)
    cloud = resample_fixed(cloud, n_points, derive_seed(seed, 1))

    side_suffix = pose.side.suffix
    return PosedAgent(
        cloud=cloud,
        eye=transforms["eye"].apply(model.joints["eye"]),
        fingertip=transforms["fingertip" + side_suffix].apply(
            model.joints["fingertip" + side_suffix]
        ),
        pose=pose,
        profile_id=model.profile_id,
    )


def solve_elevation(model: HumanModel, ray_elevation: float) -> float:
    """Arm elevation whose unperturbed virtual touch line rises at
    `ray_elevation` degrees above the horizontal.

    In the body's sagittal plane the fingertip moves on a circle around the
    shoulder; the rest eye lies inside that circle, so the line from the eye
    at the requested angle meets it exactly once ahead of the eye.
    """
    eye = model.joints["eye"]
    shoulder = model.joints["shoulder_R"]
    radius = model.arm_length * pointing_direction(model, Side.RIGHT)[1]

    angle = math.radians(ray_elevation)
    direction = np.array([math.cos(angle), math.sin(angle)])
    offset = np.array([eye[1] - shoulder[1], eye[2] - shoulder[2]])
    b = float(offset @ direction)
    c = float(offset @ offset) - radius**2
    t = -b + math.sqrt(b * b - c)
    fingertip = offset + t * direction
    return math.degrees(math.atan2(fingertip[1], fingertip[0]))
