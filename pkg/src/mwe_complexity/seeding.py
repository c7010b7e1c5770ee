"""Seeded random streams.

Every stream is a NumPy ``PCG64`` generator seeded from
``SeedSequence(seed, spawn_key=(stream_id,))``. PCG64 output for a given
seed is fixed across platforms and NumPy releases, and distinct spawn
keys give statistically independent streams, so weight initialization
and fold shuffling never share random numbers.
"""

import numpy as np

STREAMS = {
    "init": 0,
    "folds": 1,
    "synthetic": 2,
}


def rng_for(seed: int, stream: str) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(STREAMS[stream],))
    return np.random.Generator(np.random.PCG64(ss))
