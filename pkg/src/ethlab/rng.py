"""Seeded random streams.

Every stochastic routine takes an explicit :class:`numpy.random.Generator`.
Streams are Philox (counter-based) generators keyed by a 64-bit master seed
plus an optional path of integers, so realization ``r`` of a run always sees
the same numbers regardless of how realizations are scheduled.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit child seed for realization ``index`` of a run seeded with ``master_seed``."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
