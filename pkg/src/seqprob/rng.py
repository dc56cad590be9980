"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, block)``, so results do
not depend on how work is split across threads.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent generator for work unit ``block`` of run ``seed``."""
    if seed < 0 or block < 0:
        raise ValueError("seed and block must be nonnegative")
    key = ((int(seed) & _MASK64) << 64) | (int(block) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))
