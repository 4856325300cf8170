import logging
from dataclasses import dataclass

import numpy as np

from erupoint import constants
from erupoint.body.pool import AgentPool
from erupoint.body.pose import PosedAgent
from erupoint.data.data_set import EruSample
from erupoint.geometry.point_cloud import PointCloud
from erupoint.placement.placement import Placement
from erupoint.placement.scene import Scene
from erupoint.utils import get_source_colormap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComposedScene:
    """A scene cloud with a placed agent appended after its points.

    source tags every point as SOURCE_SCENE or SOURCE_AGENT. Features the
    scene lacks are filled in for the agent's sake (colors from the source
    colormap, zero normals) and dropped again by `strip_agent`.
    """

    cloud: PointCloud
    source: np.ndarray
    agent: PosedAgent
    scene_has_colors: bool
    scene_has_normals: bool

    @property
    def n_scene_points(self) -> int:
        return int(np.count_nonzero(self.source == constants.SOURCE_SCENE))

    def strip_agent(self) -> PointCloud:
        """The original scene cloud."""
        scene_points = np.flatnonzero(self.source == constants.SOURCE_SCENE)
        cloud = self.cloud.select(scene_points)
        return PointCloud(
            points=cloud.points,
            colors=cloud.colors if self.scene_has_colors else None,
            normals=cloud.normals if self.scene_has_normals else None,
        )


def place_agent(agent: PosedAgent, placement: Placement) -> PosedAgent:
    """Move a body-frame agent to its placement in the world."""
    return agent.transformed(placement.transform)


def compose_scene(
    scene: Scene, sample: EruSample, pool: AgentPool
) -> ComposedScene:
    """Append the sample's agent to the scene cloud.

    The agent is rotated about z by the placement yaw and translated so
    that its pelvis stands over the placement position. Scene points are
    kept unmodified and in order.
    """
    if sample.scene_id != scene.scene_id:
        raise ValueError(
            f"sample {sample.sample_id} belongs to scene {sample.scene_id}, "
            f"not {scene.scene_id}"
        )
    agent = place_agent(pool.agent(sample.agent_index), sample.placement)
    scene_cloud = scene.cloud
    agent_cloud = agent.cloud
    n_scene = len(scene_cloud)
    n_agent = len(agent_cloud)
    colormap = get_source_colormap()

    if scene_cloud.colors is not None:
        colors = np.concatenate(
            [
                scene_cloud.colors,
                np.tile(colormap[constants.SOURCE_AGENT], (n_agent, 1)),
            ]
        )
    else:
        colors = np.concatenate(
            [
                np.tile(colormap[constants.SOURCE_SCENE], (n_scene, 1)),
                np.tile(colormap[constants.SOURCE_AGENT], (n_agent, 1)),
            ]
        )

    normals = None
    if agent_cloud.normals is not None:
        scene_normals = (
            np.zeros((n_scene, 3))
            if scene_cloud.normals is None
            else scene_cloud.normals
        )
        normals = np.concatenate([scene_normals, agent_cloud.normals])

    cloud = PointCloud(
        points=np.concatenate([scene_cloud.points, agent_cloud.points]),
        colors=colors,
        normals=normals,
    )
    source = np.concatenate(
        [
            np.full(n_scene, constants.SOURCE_SCENE, dtype=np.uint8),
            np.full(n_agent, constants.SOURCE_AGENT, dtype=np.uint8),
        ]
    )
    logger.debug(
        "composed sample %s: %d scene + %d agent points",
        sample.sample_id,
        n_scene,
        n_agent,
    )
    return ComposedScene(
        cloud=cloud,
        source=source,
        agent=agent,
        scene_has_colors=scene_cloud.colors is not None,
        scene_has_normals=scene_cloud.normals is not None,
    )
