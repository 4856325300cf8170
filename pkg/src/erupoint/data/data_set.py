import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from erupoint.errors import SampleParseError
from erupoint.placement.placement import Placement
from erupoint.utils import tokenize

logger = logging.getLogger(__name__)

_FIELDS = (
    "sample_id",
    "scene_id",
    "object_id",
    "description",
    "tokens",
    "agent_index",
    "placement",
)


@dataclass(frozen=True)
class EruSample:
    """One embodied reference: a description of a scene object and the
    placed agent pointing at it.

    tokens default to the lowercase word tokens of the description.
    """

    sample_id: str
    scene_id: str
    object_id: int
    description: str
    placement: Placement
    tokens: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        expected = tuple(tokenize(self.description))
        if self.tokens is None:
            object.__setattr__(self, "tokens", expected)
        elif tuple(self.tokens) != expected:
            raise ValueError(
                f"sample {self.sample_id}: tokens do not match the description"
            )
        else:
            object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "object_id", int(self.object_id))

    @property
    def agent_index(self) -> int:
        return self.placement.agent_index

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "scene_id": self.scene_id,
            "object_id": self.object_id,
            "description": self.description,
            "tokens": list(self.tokens),
            "agent_index": self.agent_index,
            "placement": self.placement.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EruSample":
        placement = Placement.from_dict(data["placement"])
        if int(data["agent_index"]) != placement.agent_index:
            raise ValueError("agent_index disagrees with the placement")
        return cls(
            sample_id=str(data["sample_id"]),
            scene_id=str(data["scene_id"]),
            object_id=data["object_id"],
            description=data["description"],
            placement=placement,
            tokens=tuple(data["tokens"]),
        )


def write_samples(
    samples: Sequence[EruSample], path: Union[str, Path]
) -> None:
    """Write samples as JSON lines, one sample per line.

    Parameters
    ----------
    samples : sequence of EruSample
        Samples in output order.
    path : str or Path
        Output file, UTF-8 encoded. Overwritten when it exists.
    """
    with open(path, "w", encoding="utf-8") as f:
        for sample in samples:
            f.write(json.dumps(sample.to_dict(), ensure_ascii=False))
            f.write("\n")
    logger.info("wrote %d samples to %s", len(samples), path)


def read_samples(path: Union[str, Path]) -> List[EruSample]:
    """Read a samples JSON lines file.

    Blank lines are skipped.

    Parameters
    ----------
    path : str or Path
        A file written by `write_samples`.

    Returns
    -------
    samples : list of EruSample
        Samples in file order.

    Raises
    ------
    SampleParseError
        On invalid JSON or a missing or malformed field, with the
        offending line number.
    """
    samples = []
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            samples.append(_parse_line(line, line_number))
    return samples


def _parse_line(line: str, line_number: int) -> EruSample:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as e:
        raise SampleParseError(f"invalid JSON: {e.msg}", line_number) from e
    if not isinstance(data, dict):
        raise SampleParseError("expected a JSON object", line_number)
    for name in _FIELDS:
        if name not in data:
            raise SampleParseError(
                f"missing field '{name}'", line_number, field=name
            )
    try:
        return EruSample.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise SampleParseError(str(e), line_number) from e
