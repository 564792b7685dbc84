"""Named RNG sub-streams so every random draw traces to the run seed.

Each consumer derives its generator from (seed, stream id, day), which
keeps streams independent, reproducible, and indifferent to the order
in which days or components execute.
"""

from __future__ import annotations

import numpy as np

STREAM_WEATHER = 1
STREAM_EXCITATION = 2
STREAM_FEEDBACK = 3


def substream(seed: int, stream: int, day: int = 0) -> np.random.Generator:
    """Generator for one (seed, stream, day) cell."""
    return np.random.default_rng(np.random.SeedSequence((seed, stream, day)))
