import dataclasses
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from erupoint import constants


@dataclass(frozen=True)
class Config:
    """Tunable constants of the synthesis, grounding and training pipeline.

    Values come from the defaults below, optionally overridden by a TOML
    file of ``key = value`` pairs, then by command line flags.
    """

    voxel_size: float = constants.VOXEL_SIZE
    agent_points: int = constants.AGENT_POINTS
    fluctuation_deg: float = constants.FLUCTUATION
    perturb_range_deg: float = constants.PERTURB_RANGE
    perturb_sigma_deg: float = constants.PERTURB_SIGMA
    elevation_step_deg: float = constants.ELEVATION_STEP
    distance_min: float = 1.0
    distance_max: float = 4.0
    footprint_radius: float = 0.3
    min_spacing: float = 0.5
    max_attempts: int = 2000
    pointing_retries: int = constants.POINTING_RETRIES
    hidden_size: int = 32
    num_heads: int = 1
    vocab_size: int = 4096
    embed_dim: int = 64
    w_g: float = 0.5
    w_l: float = 0.5
    learning_rate: float = 0.01
    optimizer: str = "adam"
    batch_size: int = 8
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Raise ValueError when a value is out of its allowed range."""
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if field.name in ("seed", "threads", "w_g", "w_l"):
                if value < 0:
                    raise ValueError(f"{field.name} must be non-negative")
                continue
            if isinstance(value, (int, float)) and value <= 0:
                raise ValueError(f"{field.name} must be positive, got {value}")
        if self.w_g + self.w_l <= 0:
            raise ValueError("w_g + w_l must be positive")
        if self.fluctuation_deg > 45:
            raise ValueError("fluctuation_deg must be at most 45")
        steps = 180.0 / self.elevation_step_deg
        if not math.isclose(steps, round(steps), abs_tol=1e-9):
            raise ValueError("elevation_step_deg must divide 180 evenly")
        if self.distance_min >= self.distance_max:
            raise ValueError("distance_min must be below distance_max")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer: {self.optimizer}")

    @property
    def distance_band(self):
        return (self.distance_min, self.distance_max)

    def with_overrides(self, **overrides: Any) -> "Config":
        """Return a copy with the non-None overrides applied."""
        values = {k: v for k, v in overrides.items() if v is not None}
        _check_keys(values)
        return dataclasses.replace(self, **values)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "Config":
        with open(path, "rb") as f:
            values = tomllib.load(f)
        _check_keys(values)
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def _check_keys(values: Dict[str, Any]) -> None:
    known = {field.name for field in dataclasses.fields(Config)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
