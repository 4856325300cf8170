import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from erupoint.constants import LEXICON_CATEGORIES
from erupoint.data.data_set import EruSample

logger = logging.getLogger(__name__)

LEXICON_DIR = Path(__file__).parent / "lexicons"

Lexicons = Mapping[str, FrozenSet[str]]


def load_lexicons(
    directory: Optional[Union[str, Path]] = None,
) -> Dict[str, FrozenSet[str]]:
    """Read the attribute word lists, one lowercase word per line.

    Parameters
    ----------
    directory : str or Path, optional
        Directory holding spatial.txt, color.txt, shape.txt and size.txt.
        The packaged lists are used when omitted.

    Returns
    -------
    lexicons : dict of str to frozenset
        Word set of each category. Blank lines are skipped.

    Raises
    ------
    OSError
        When a list file cannot be read.
    """
    directory = LEXICON_DIR if directory is None else Path(directory)
    lexicons = {}
    for category in LEXICON_CATEGORIES:
        path = directory / f"{category}.txt"
        with open(path, encoding="utf-8") as f:
            words = {line.strip().lower() for line in f}
        lexicons[category] = frozenset(word for word in words if word)
    return lexicons


@dataclass(frozen=True)
class DescriptionStats:
    """Share of descriptions using each attribute category, in percent.

    positions_histogram maps a number of agent positions to the number of
    referred objects with that many positions.
    """

    pct_spatial: float
    pct_color: float
    pct_shape: float
    pct_size: float
    n_descriptions: int
    mean_length: float = 0.0
    positions_histogram: Dict[int, int] = field(default_factory=dict)

    @property
    def mean_positions(self) -> float:
        n_objects = sum(self.positions_histogram.values())
        if n_objects == 0:
            return 0.0
        total = sum(k * v for k, v in self.positions_histogram.items())
        return total / n_objects

    def to_dict(self):
        return {
            "pct_spatial": self.pct_spatial,
            "pct_color": self.pct_color,
            "pct_shape": self.pct_shape,
            "pct_size": self.pct_size,
            "n_descriptions": self.n_descriptions,
            "mean_length": self.mean_length,
            "mean_positions": self.mean_positions,
            "positions_histogram": {
                str(k): v for k, v in sorted(self.positions_histogram.items())
            },
        }


def describe_stats(
    samples: Sequence[EruSample], lexicons: Lexicons
) -> DescriptionStats:
    """Attribute usage over the descriptions of a sample set.

    A description uses a category when any of its tokens is in that
    category's lexicon.

    Parameters
    ----------
    samples : sequence of EruSample
        The samples whose descriptions are counted.
    lexicons : Lexicons
        Word set of every category in LEXICON_CATEGORIES.

    Returns
    -------
    stats : DescriptionStats
        Usage percentages, mean description length in tokens and the
        positions-per-object histogram. All zero for an empty sample set.

    Raises
    ------
    ValueError
        When a category lexicon is missing.
    """
    missing = set(LEXICON_CATEGORIES) - set(lexicons)
    if missing:
        raise ValueError(f"missing lexicons: {', '.join(sorted(missing))}")
    if len(samples) == 0:
        return DescriptionStats(0.0, 0.0, 0.0, 0.0, 0)

    usage = pd.DataFrame(
        [
            {
                category: not lexicons[category].isdisjoint(sample.tokens)
                for category in LEXICON_CATEGORIES
            }
            for sample in samples
        ]
    )
    percentages = usage.mean() * 100
    positions = Counter((s.scene_id, s.object_id) for s in samples)
    return DescriptionStats(
        pct_spatial=float(percentages["spatial"]),
        pct_color=float(percentages["color"]),
        pct_shape=float(percentages["shape"]),
        pct_size=float(percentages["size"]),
        n_descriptions=len(samples),
        mean_length=float(np.mean([len(s.tokens) for s in samples])),
        positions_histogram=dict(sorted(Counter(positions.values()).items())),
    )


def plot_stats(stats: DescriptionStats, path: Union[str, Path]) -> None:
    """Save a figure of attribute usage and positions per object.

    Parameters
    ----------
    stats : DescriptionStats
        Statistics to plot.
    path : str or Path
        Output image; the format follows the file suffix.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (usage_ax, positions_ax) = plt.subplots(1, 2, figsize=(9, 3.5))
    values = [getattr(stats, f"pct_{c}") for c in LEXICON_CATEGORIES]
    usage_ax.bar(LEXICON_CATEGORIES, values, color="tab:blue")
    usage_ax.set_ylim(0, 100)
    usage_ax.set_ylabel("descriptions (%)")

    counts = sorted(stats.positions_histogram.items())
    positions_ax.bar(
        [str(k) for k, _ in counts], [v for _, v in counts], color="tab:orange"
    )
    positions_ax.set_xlabel("positions per object")
    positions_ax.set_ylabel("objects")

    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    logger.info("saved statistics figure to %s", path)
