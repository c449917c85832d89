"""
Named random streams. Every consumer draws from its own generator derived from
(seed, stream id, keys...), so adding or removing one consumer never shifts another.
"""
from __future__ import annotations
from enum import IntEnum

import numpy as np

class Stream(IntEnum):
    SPAWN = 0
    COMMS = 1
    RRT_STAR = 2
    SWEEP = 3


def stream(seed: int, stream_id: Stream, *keys: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id), *(int(k) for k in keys)))
    return np.random.default_rng(seq)

def derive_seed(seed: int, *keys: int) -> int:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(Stream.SWEEP), *(int(k) for k in keys)))
    return int(seq.generate_state(1, dtype=np.uint32)[0])
