"""Counter-based random streams keyed by (seed, task index, ...).

Each task's stream depends only on its key, never on how many draws other tasks
made or in which order they ran.
"""

import numpy as np


def child_rng(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
