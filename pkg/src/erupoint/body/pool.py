import logging
import struct
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import toolz as tz
from joblib import Parallel, delayed

from erupoint import constants
from erupoint.body.human_model import PROFILES, HumanModel, rest_joints
from erupoint.body.pose import (
    DEFAULT_GRID,
    ElevationGrid,
    Pose,
    PosedAgent,
    Side,
    draw_perturbation,
    pointing_landmarks,
    pose_pointing,
)
from erupoint.geometry.io import read_erupc_block, write_erupc_block
from erupoint.utils import derive_seed, resolve_jobs

logger = logging.getLogger(__name__)

# agents posed per parallel task
_CHUNK_SIZE = 240

_ENTRY_FORMAT = "<BBf3f3f"
_ENTRY_SIZE = struct.calcsize(_ENTRY_FORMAT)

PoolEntry = Tuple[int, Side, float]


class AgentPool:
    """Posed agents indexed by (profile, side, elevation).

    Landmarks (eye and fingertip) of every agent are held in memory; clouds
    are produced on demand, either by posing the source models or by reading
    the pool file, and kept in a small cache.

    The pool index is ``(slot * 2 + side) * n_elevations + elevation_index``
    where `slot` is the position of the profile in `profile_ids`.
    """

    def __init__(
        self,
        profile_ids: Sequence[int],
        eyes: np.ndarray,
        fingertips: np.ndarray,
        grid: ElevationGrid = DEFAULT_GRID,
        models: Optional[Sequence[HumanModel]] = None,
        seed: int = 0,
        pose_kwargs: Optional[Dict[str, Any]] = None,
        path: Optional[Union[str, Path]] = None,
        offsets: Optional[np.ndarray] = None,
        cache_size: int = 256,
    ):
        self.profile_ids = [int(p) for p in profile_ids]
        if len(set(self.profile_ids)) != len(self.profile_ids):
            raise ValueError("pool profiles must be distinct")
        self.grid = grid
        self.eyes = np.asarray(eyes, dtype=float).reshape(-1, 3)
        self.fingertips = np.asarray(fingertips, dtype=float).reshape(-1, 3)
        if len(self.eyes) != len(self) or len(self.fingertips) != len(self):
            raise ValueError("landmarks must have one row per pool entry")
        if models is None and path is None:
            raise ValueError("a pool needs source models or a pool file")

        self.models = (
            None if models is None else {m.profile_id: m for m in models}
        )
        self.seed = seed
        self.pose_kwargs = dict(pose_kwargs or {})
        self.path = None if path is None else Path(path)
        self.offsets = offsets
        self.cache_size = cache_size
        self._cached_agent = lru_cache(maxsize=cache_size)(self._load_agent)

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_cached_agent"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._cached_agent = lru_cache(maxsize=self.cache_size)(
            self._load_agent
        )

    def __len__(self) -> int:
        return len(self.profile_ids) * len(constants.SIDES) * self.grid.size

    def index(
        self, profile_id: int, side: Union[Side, str], elevation: float
    ) -> int:
        try:
            slot = self.profile_ids.index(int(profile_id))
        except ValueError:
            raise KeyError(f"profile {profile_id} is not in the pool") from None
        side_index = Side.parse(side).index
        slot_side = slot * len(constants.SIDES) + side_index
        return slot_side * self.grid.size + self.grid.index(elevation)

    def entry(self, index: int) -> PoolEntry:
        """(profile_id, side, elevation) of a pool index."""
        self._check_index(index)
        slot_side, elevation_index = divmod(int(index), self.grid.size)
        slot, side_index = divmod(slot_side, len(constants.SIDES))
        return (
            self.profile_ids[slot],
            Side.parse(side_index),
            self.grid.value(elevation_index),
        )

    def landmarks(self, index: int) -> Tuple[np.ndarray, np.ndarray]:
        """(eye, fingertip) of an agent in its body frame."""
        self._check_index(index)
        return self.eyes[index].copy(), self.fingertips[index].copy()

    def agent(self, index: int) -> PosedAgent:
        self._check_index(index)
        return self._cached_agent(int(index))

    def lookup(
        self, profile_id: int, side: Union[Side, str], elevation: float
    ) -> PosedAgent:
        return self.agent(self.index(profile_id, side, elevation))

    def skeleton(self, profile_id: int) -> HumanModel:
        """Rest joints of a profile, without surface points."""
        if self.models is not None:
            return self.models[profile_id]
        height = PROFILES[profile_id].height
        return HumanModel(
            profile_id=profile_id,
            height=height,
            joints=rest_joints(height),
            parts=[],
        )

    def left_fraction(self) -> float:
        sides = [self.entry(i)[1] for i in range(len(self))]
        return sides.count(Side.LEFT) / len(sides)

    def _check_index(self, index: int) -> None:
        if not 0 <= int(index) < len(self):
            raise IndexError(f"pool index {index} out of range")

    def _load_agent(self, index: int) -> PosedAgent:
        if self.models is not None:
            return _pose_entry(
                self.models, self.seed, self.grid, self.pose_kwargs,
                index, self.entry(index),
            )
        profile_id, side, elevation = self.entry(index)
        with open(self.path, "rb") as f:
            f.seek(int(self.offsets[index]))
            cloud = read_erupc_block(f)
        # the file format does not record the perturbation angles
        return PosedAgent(
            cloud=cloud,
            eye=self.eyes[index].copy(),
            fingertip=self.fingertips[index].copy(),
            pose=Pose(side=side, elevation=elevation),
            profile_id=profile_id,
        )

    @classmethod
    def from_models(
        cls,
        models: Sequence[HumanModel],
        seed: int,
        grid: ElevationGrid = DEFAULT_GRID,
        **pose_kwargs,
    ) -> "AgentPool":
        """A pool that poses agents from the models when they are needed.

        Agent `i` is posed with the seed derived from (seed, i), so every
        agent is reproducible on its own.
        """
        models = list(models)
        perturb_kwargs = tz.keyfilter(
            lambda key: key in ("sigma", "bound"), pose_kwargs
        )
        eyes = []
        fingertips = []
        for model in models:
            for side in constants.SIDES:
                for elevation_index in range(grid.size):
                    pose = Pose(
                        side=side,
                        elevation=grid.value(elevation_index),
                        perturb=draw_perturbation(
                            derive_seed(seed, len(eyes)), **perturb_kwargs
                        ),
                    )
                    joints = pointing_landmarks(model, pose)
                    eyes.append(joints["eye"])
                    fingertips.append(joints["fingertip" + pose.side.suffix])

        return cls(
            profile_ids=[m.profile_id for m in models],
            eyes=np.array(eyes),
            fingertips=np.array(fingertips),
            grid=grid,
            models=models,
            seed=seed,
            pose_kwargs=pose_kwargs,
        )

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "AgentPool":
        """Open a pool file; clouds are read lazily."""
        header = read_pool_header(path)
        profile_ids = list(dict.fromkeys(header["profiles"].tolist()))
        pool = cls(
            profile_ids=profile_ids,
            eyes=header["eyes"],
            fingertips=header["fingertips"],
            path=path,
            offsets=header["offsets"],
        )
        entries = zip(
            header["profiles"], header["sides"], header["elevations"]
        )
        for index, (profile_id, side, elevation) in enumerate(entries):
            if pool.index(profile_id, int(side), elevation) != index:
                raise ValueError(f"{path}: pool entries are out of order")
        return pool


def generate_pool(
    models: Sequence[HumanModel],
    seed: int,
    grid: ElevationGrid = DEFAULT_GRID,
    **pose_kwargs,
) -> AgentPool:
    """The full agent pool: 10 profiles x 2 sides x every grid elevation.

    Parameters
    ----------
    models : sequence of HumanModel
        One model per profile.
    seed : int
        Master seed of the per-agent perturbation and resampling draws.
    grid : ElevationGrid
        Arm elevations to pose.
    **pose_kwargs
        Passed to `pose_pointing`.

    Returns
    -------
    pool : AgentPool
        Landmarks are computed up front; clouds are posed on first access.

    Raises
    ------
    ValueError
        When `models` does not hold exactly one model per profile.
    """
    if len(models) != len(PROFILES):
        raise ValueError(
            f"the pool needs exactly {len(PROFILES)} models, got {len(models)}"
        )
    return AgentPool.from_models(models, seed, grid=grid, **pose_kwargs)


def write_pool(
    pool: AgentPool, path: Union[str, Path], n_jobs: int = 1
) -> None:
    """Write every agent of the pool to a binary pool file.

    Layout (little-endian): magic "ERUPOOL1", u32 count, then per agent:
    profile u8, side u8, elevation f32, eye f32x3, fingertip f32x3 and the
    cloud as an ERUPC block. Agents are posed in parallel chunks and
    written in index order, so the file does not depend on `n_jobs`.
    """
    n_jobs = resolve_jobs(n_jobs)
    chunks = list(tz.partition_all(_CHUNK_SIZE, range(len(pool))))
    with open(path, "wb") as f:
        f.write(constants.POOL_MAGIC)
        f.write(struct.pack("<I", len(pool)))
        for batch in tz.partition_all(8, chunks):
            if pool.models is not None and n_jobs != 1:
                results = Parallel(n_jobs=n_jobs)(
                    delayed(_pose_chunk)(
                        pool.models,
                        pool.seed,
                        pool.grid,
                        pool.pose_kwargs,
                        [(index, pool.entry(index)) for index in chunk],
                    )
                    for chunk in batch
                )
            else:
                results = [
                    [pool.agent(index) for index in chunk] for chunk in batch
                ]
            for agents in results:
                for agent in agents:
                    _write_agent(f, agent)
            logger.info("wrote %d / %d agents", batch[-1][-1] + 1, len(pool))


def read_pool_header(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """Read the per-agent entries of a pool file and the cloud offsets."""
    profiles: List[int] = []
    sides: List[int] = []
    elevations: List[float] = []
    eyes: List[Tuple[float, ...]] = []
    fingertips: List[Tuple[float, ...]] = []
    offsets: List[int] = []
    with open(path, "rb") as f:
        magic = f.read(len(constants.POOL_MAGIC))
        if magic != constants.POOL_MAGIC:
            raise ValueError(f"{path}: not an agent pool file")
        (count,) = struct.unpack("<I", f.read(4))
        for _ in range(count):
            values = struct.unpack(_ENTRY_FORMAT, f.read(_ENTRY_SIZE))
            profiles.append(values[0])
            sides.append(values[1])
            elevations.append(values[2])
            eyes.append(values[3:6])
            fingertips.append(values[6:9])
            offsets.append(f.tell())
            _skip_erupc_block(f)
    return {
        "profiles": np.array(profiles, dtype=int),
        "sides": np.array(sides, dtype=int),
        "elevations": np.array(elevations, dtype=float),
        "eyes": np.array(eyes, dtype=float).reshape(-1, 3),
        "fingertips": np.array(fingertips, dtype=float).reshape(-1, 3),
        "offsets": np.array(offsets, dtype=np.int64),
    }


def _pose_entry(
    models: Dict[int, HumanModel],
    seed: int,
    grid: ElevationGrid,
    pose_kwargs: Dict[str, Any],
    index: int,
    entry: PoolEntry,
) -> PosedAgent:
    profile_id, side, elevation = entry
    return pose_pointing(
        models[profile_id],
        side,
        elevation,
        seed=derive_seed(seed, index),
        grid=grid,
        **pose_kwargs,
    )


def _pose_chunk(models, seed, grid, pose_kwargs, entries) -> List[PosedAgent]:
    return [
        _pose_entry(models, seed, grid, pose_kwargs, index, entry)
        for index, entry in entries
    ]


def _write_agent(f, agent: PosedAgent) -> None:
    f.write(
        struct.pack(
            _ENTRY_FORMAT,
            agent.profile_id,
            agent.pose.side.index,
            agent.pose.elevation,
            *agent.eye.tolist(),
            *agent.fingertip.tolist(),
        )
    )
    write_erupc_block(agent.cloud, f)


def _skip_erupc_block(f) -> None:
    magic = f.read(len(constants.ERUPC_MAGIC))
    if magic != constants.ERUPC_MAGIC:
        raise ValueError("corrupt pool file: bad point cloud block")
    (count,) = struct.unpack("<I", f.read(4))
    f.seek(12 * count, 1)
    for _ in range(2):
        (present,) = struct.unpack("<B", f.read(1))
        if present:
            f.seek(12 * count, 1)
