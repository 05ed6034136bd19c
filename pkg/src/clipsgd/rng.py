"""Seeded counter-based random streams.

Every stochastic engine takes an integer seed and builds its own Philox
stream from it, so runs are reproducible and independent of the order in
which parallel workers execute them.
"""

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return np.random.Generator(np.random.Philox(key=int(seed)))
