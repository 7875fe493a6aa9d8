"""Seeded random streams.

Every draw comes from a Philox (counter-based) generator keyed by the master
seed, a fixed purpose label and optional extra key words. Adding a new
consumer with a new label never shifts the numbers another label sees.
"""

from __future__ import annotations

import secrets
from enum import IntEnum

import numpy as np

# Bump when any stream layout changes; old seeds then map to new numbers.
RNG_VERSION = 1


class Stream(IntEnum):
    TRIAL = 0
    EDGES = 1
    THRESHOLDS = 2
    INIT = 3
    COUPLING = 4
    INSTANCE = 5


def generator(seed: int, stream: Stream, *key: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seeds must be nonnegative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(RNG_VERSION, int(stream), *map(int, key)))
    return np.random.Generator(np.random.Philox(ss))


def trial_seed(master: int, index: int) -> int:
    """64-bit seed for trial ``index``; depends only on ``(master, index)``."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(RNG_VERSION, int(Stream.TRIAL), int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def fresh_seed() -> int:
    return secrets.randbits(63)
