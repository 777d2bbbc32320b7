"""Seeded random number streams.

All randomness in the library flows through numpy's PCG64 generator, created
from an integer seed via ``SeedSequence``. Identical seeds produce identical
streams on every platform. Independent, reproducible substreams are derived
from a root seed plus an integer spawn key, so components (data generation,
source assignment, corruption, ...) each own a stream that does not depend on
how often the others draw.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Root generator for a given seed."""
    return np.random.default_rng(np.random.SeedSequence(seed))


def child_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream identified by ``key`` under ``seed``.

    The same (seed, key) pair always yields the same stream, and streams with
    different keys are statistically independent.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))
