from erupoint.body.human_model import (
    PROFILES,
    HumanModel,
    build_all_humans,
    build_human,
)
from erupoint.body.pool import AgentPool, generate_pool, write_pool
from erupoint.body.pose import Pose, PosedAgent, Side, pose_pointing

__all__ = (
    "PROFILES",
    "AgentPool",
    "HumanModel",
    "Pose",
    "PosedAgent",
    "Side",
    "build_all_humans",
    "build_human",
    "generate_pool",
    "pose_pointing",
    "write_pool",
)
