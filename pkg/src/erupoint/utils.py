import logging
import re
import sys
from typing import Dict, List, Optional

import numpy as np

from erupoint.constants import SOURCE_AGENT, SOURCE_SCENE

_TOKEN_PATTERN = re.compile(r"\w+")


def get_source_colormap() -> Dict[int, np.ndarray]:
    """Return the RGB colors used to paint composed scene points by source
    when the scene carries no colors of its own.
    """
    colormap = {
        SOURCE_SCENE: np.array([0.5, 0.5, 0.5]),  # grey
        SOURCE_AGENT: np.array([1.0, 0.65, 0.0]),  # orange
    }
    return colormap


def init_logging(verbose: bool = False) -> logging.Logger:
    """Attach a standard error handler to the package logger.

    Calling this more than once does not stack handlers.
    """
    logger = logging.getLogger("erupoint")
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    if not any(getattr(h, "_erupoint", False) for h in logger.handlers):
        stream_handler = logging.StreamHandler(sys.stderr)
        formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
        )
        stream_handler.setFormatter(formatter)
        stream_handler._erupoint = True
        logger.addHandler(stream_handler)
    return logger


def derive_seed(seed: int, *keys: int) -> int:
    """Derive an independent 32-bit seed from a master seed and integer keys.

    The same (seed, keys) always gives the same value, so work split across
    processes draws the same numbers as a serial run.
    """
    sequence = np.random.SeedSequence([int(seed), *(int(k) for k in keys)])
    return int(sequence.generate_state(1)[0])


def tokenize(text: str) -> List[str]:
    """Lowercase word tokens, splitting on whitespace and punctuation."""
    return _TOKEN_PATTERN.findall(text.lower())


def resolve_jobs(n_jobs: Optional[int]) -> int:
    """joblib worker count of a --threads value; 0 means one per core."""
    if not n_jobs:
        return -1
    return int(n_jobs)
