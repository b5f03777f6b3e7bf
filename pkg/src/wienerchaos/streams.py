"""Named, splittable random streams.

Every random draw in the package comes from a generator keyed by
``(seed, stream name, index...)`` so a replicate's numbers never depend on
how work was scheduled across processes.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream_id(name: str) -> int:
    """Stable 32-bit integer for a stream name."""
    return zlib.crc32(name.encode("utf-8"))


def substream(seed: int, name: str, *index: int) -> np.random.Generator:
    """Generator for the named substream ``index`` of ``seed``."""
    if seed is None:
        raise ValueError("a seed is required")
    key = (stream_id(name),) + tuple(int(i) for i in index)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))
