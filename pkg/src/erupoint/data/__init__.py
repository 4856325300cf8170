from erupoint.data.composition import (
    ComposedScene,
    compose_scene,
    place_agent,
)
from erupoint.data.data_manager import DataManager, SplitSpec, split_samples
from erupoint.data.data_set import EruSample, read_samples, write_samples
from erupoint.data.stats import DescriptionStats, describe_stats, load_lexicons
from erupoint.data.synthesis import synthesize_samples

__all__ = (
    "ComposedScene",
    "DataManager",
    "DescriptionStats",
    "EruSample",
    "SplitSpec",
    "compose_scene",
    "describe_stats",
    "load_lexicons",
    "place_agent",
    "read_samples",
    "split_samples",
    "synthesize_samples",
    "write_samples",
)
