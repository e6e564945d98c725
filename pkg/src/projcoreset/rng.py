"""Seeded random streams.

Every random choice in the package goes through :func:`make_rng`. A stream
is identified by a master seed plus an optional tuple of nonnegative
integers (the *key*), e.g. ``(cell_id,)`` for a benchmark cell or
``(floor, node)`` for a merge-reduce node. The key becomes the numpy
``SeedSequence`` spawn key, so streams with different keys are
statistically independent and the mapping does not depend on how many
workers run or in which order.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed, *key: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        if key:
            raise ValueError("cannot derive a keyed stream from an existing Generator")
        return seed
    if seed is None:
        seed = 0
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
