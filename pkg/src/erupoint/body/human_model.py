import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import trimesh
from trimesh.geometry import align_vectors

from erupoint.geometry.point_cloud import PointCloud, concatenate
from erupoint.utils import derive_seed

logger = logging.getLogger(__name__)

# minimum surface sampling density of body parts in points / m^2
SURFACE_DENSITY = 3500.0


@dataclass(frozen=True)
class HumanProfile:
    profile_id: int
    name: str
    sex: str
    age_group: str
    height: float


# heights in meters near the 50th to 95th percentiles of northern European
# adults; the children are adolescents. The ten profiles average 1.757 m.
PROFILES: Tuple[HumanProfile, ...] = (
    HumanProfile(0, "adult_male_a", "male", "adult", 1.80),
    HumanProfile(1, "adult_male_b", "male", "adult", 1.85),
    HumanProfile(2, "adult_male_c", "male", "adult", 1.90),
    HumanProfile(3, "adult_female_a", "female", "adult", 1.67),
    HumanProfile(4, "adult_female_b", "female", "adult", 1.72),
    HumanProfile(5, "adult_female_c", "female", "adult", 1.77),
    HumanProfile(6, "boy", "male", "child", 1.72),
    HumanProfile(7, "girl", "female", "child", 1.62),
    HumanProfile(8, "elderly_male", "male", "elderly", 1.82),
    HumanProfile(9, "elderly_female", "female", "elderly", 1.70),
)

# joint -> parent joint; the pelvis is the root
JOINT_PARENTS: Dict[str, Optional[str]] = {
    "pelvis": None,
    "spine_top": "pelvis",
    "head": "spine_top",
    "eye": "head",
    "shoulder_L": "spine_top",
    "elbow_L": "shoulder_L",
    "wrist_L": "elbow_L",
    "fingertip_L": "wrist_L",
    "shoulder_R": "spine_top",
    "elbow_R": "shoulder_R",
    "wrist_R": "elbow_R",
    "fingertip_R": "wrist_R",
    "hip_L": "pelvis",
    "knee_L": "hip_L",
    "ankle_L": "knee_L",
    "hip_R": "pelvis",
    "knee_R": "hip_R",
    "ankle_R": "knee_R",
}

# rest pose as fractions of body height: (lateral x, forward y, up z).
# the body faces +y, its right hand side is +x, arms hang down.
_REST_FRACTIONS: Dict[str, Tuple[float, float, float]] = {
    "pelvis": (0.0, 0.0, 0.53),
    "spine_top": (0.0, 0.0, 0.83),
    "head": (0.0, 0.01, 0.925),
    "eye": (0.0, 0.05, 0.936),
    "shoulder_R": (0.10, 0.0, 0.815),
    "elbow_R": (0.10, 0.0, 0.629),
    "wrist_R": (0.10, 0.0, 0.483),
    "fingertip_R": (0.10, 0.0, 0.375),
    "hip_R": (0.055, 0.0, 0.50),
    "knee_R": (0.055, 0.0, 0.285),
    "ankle_R": (0.055, 0.0, 0.045),
}

# capsule radius of each bone as a fraction of body height
_BONE_RADII: Dict[Tuple[str, str], float] = {
    ("pelvis", "spine_top"): 0.08,
    ("spine_top", "head"): 0.025,
    ("spine_top", "shoulder_L"): 0.03,
    ("spine_top", "shoulder_R"): 0.03,
    ("shoulder_L", "elbow_L"): 0.025,
    ("elbow_L", "wrist_L"): 0.02,
    ("wrist_L", "fingertip_L"): 0.012,
    ("shoulder_R", "elbow_R"): 0.025,
    ("elbow_R", "wrist_R"): 0.02,
    ("wrist_R", "fingertip_R"): 0.012,
    ("pelvis", "hip_L"): 0.05,
    ("pelvis", "hip_R"): 0.05,
    ("hip_L", "knee_L"): 0.035,
    ("knee_L", "ankle_L"): 0.028,
    ("hip_R", "knee_R"): 0.035,
    ("knee_R", "ankle_R"): 0.028,
}

# the head is a sphere around the head joint, carried by the head -> eye bone
_HEAD_BONE = ("head", "eye")
_HEAD_RADIUS = 0.055


@dataclass(frozen=True)
class BodyPart:
    """Surface points of one body part, in the rest pose.

    The part moves rigidly with its bone's child joint.
    """

    bone: Tuple[str, str]
    cloud: PointCloud


@dataclass(frozen=True)
class HumanModel:
    profile_id: int
    height: float
    joints: Dict[str, np.ndarray]
    parts: List[BodyPart]

    @property
    def profile(self) -> HumanProfile:
        return PROFILES[self.profile_id]

    @property
    def arm_length(self) -> float:
        """Shoulder to fingertip distance, identical for both arms."""
        return float(
            np.linalg.norm(self.joints["fingertip_R"] - self.joints["shoulder_R"])
        )

    @property
    def shoulder_offset(self) -> float:
        """Lateral distance of each shoulder from the body midline."""
        return float(abs(self.joints["shoulder_R"][0]))

    def raw_cloud(self) -> PointCloud:
        """All part surface points in the rest pose."""
        return concatenate([part.cloud for part in self.parts])


def get_profile(profile: Union[int, str]) -> HumanProfile:
    """Look up a profile by id or by name."""
    for candidate in PROFILES:
        if profile in (candidate.profile_id, candidate.name):
            return candidate
    raise ValueError(f"unknown human profile: {profile!r}")


def rest_joints(height: float) -> Dict[str, np.ndarray]:
    """Rest positions of every joint for a body of the given height."""
    joints = {}
    for name, fractions in _REST_FRACTIONS.items():
        position = np.array(fractions) * height
        joints[name] = position
        if name.endswith("_R"):
            mirrored = position.copy()
            mirrored[0] = -mirrored[0]
            joints[name[:-2] + "_L"] = mirrored
    return {name: joints[name] for name in JOINT_PARENTS}


def build_human(profile_id: Union[int, str], seed: int) -> HumanModel:
    """Build a procedural articulated body for one of the ten profiles.

    Every bone is a capsule mesh (the head a sphere) whose surface is
    sampled with face normals at SURFACE_DENSITY, so the raw body always
    holds more than 3000 points.

    Parameters
    ----------
    profile_id : int or str
        Profile id or name from PROFILES.
    seed : int
        Seed of the surface sampling; the model is a pure function of
        (profile_id, seed).

    Returns
    -------
    model : HumanModel
        Rest-pose body standing on z = 0 and facing +y.

    Raises
    ------
    ValueError
        When the profile is unknown.
    """
    profile = get_profile(profile_id)
    height = profile.height
    joints = rest_joints(height)

    parts = []
    for part_index, (bone, radius) in enumerate(_BONE_RADII.items()):
        mesh = _capsule_between(
            joints[bone[0]], joints[bone[1]], radius * height
        )
        cloud = _sample_mesh(mesh, derive_seed(seed, profile.profile_id, part_index))
        parts.append(BodyPart(bone=bone, cloud=cloud))

    head = trimesh.creation.icosphere(
        subdivisions=3, radius=_HEAD_RADIUS * height
    )
    head.apply_translation(joints["head"])
    head_seed = derive_seed(seed, profile.profile_id, len(parts))
    parts.append(BodyPart(bone=_HEAD_BONE, cloud=_sample_mesh(head, head_seed)))

    logger.debug(
        "built %s: height %.3f m, %d raw points",
        profile.name,
        height,
        sum(len(p.cloud) for p in parts),
    )
    return HumanModel(
        profile_id=profile.profile_id,
        height=height,
        joints=joints,
        parts=parts,
    )


def build_all_humans(seed: int) -> List[HumanModel]:
    return [build_human(p.profile_id, seed) for p in PROFILES]


def _capsule_between(
    start: np.ndarray, end: np.ndarray, radius: float
) -> trimesh.Trimesh:
    axis = end - start
    length = float(np.linalg.norm(axis))
    mesh = trimesh.creation.capsule(height=length, radius=radius)
    # center the capsule on the origin regardless of trimesh's convention
    mesh.apply_translation(-mesh.bounds.mean(axis=0))
    mesh.apply_transform(align_vectors([0.0, 0.0, 1.0], axis / length))
    mesh.apply_translation((start + end) / 2)
    return mesh


def _sample_mesh(mesh: trimesh.Trimesh, seed: int) -> PointCloud:
    count = max(int(math.ceil(mesh.area * SURFACE_DENSITY)), 16)
    points, face_index = trimesh.sample.sample_surface(mesh, count, seed=seed)
    normals = mesh.face_normals[face_index]
    return PointCloud(points=np.asarray(points), normals=np.asarray(normals))
