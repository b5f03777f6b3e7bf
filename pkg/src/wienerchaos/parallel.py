"""Deterministic fan-out of replicate work over processes."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np


def _run_chunk(fn: Callable[[int], np.ndarray], indices: Sequence[int]) -> list:
    return [fn(i) for i in indices]


def map_replicates(fn: Callable[[int], np.ndarray], n_replicates: int, workers: int = 1, chunk: int = 16) -> list:
    """``[fn(0), ..., fn(n_replicates - 1)]``, optionally computed in a process pool.

    ``fn`` must be picklable and must derive all randomness from its
    replicate index, so the result does not depend on ``workers``.
    """
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if workers == 1 or n_replicates <= chunk:
        return [fn(i) for i in range(n_replicates)]
    chunks = [range(lo, min(lo + chunk, n_replicates)) for lo in range(0, n_replicates, chunk)]
    out: list = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_chunk, [fn] * len(chunks), chunks):
            out.extend(part)
    return out
