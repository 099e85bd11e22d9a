"""Counter-based RNG streams: (seed, point index, stream) -> Generator.

Philox keys make parallel and serial sweeps draw identical numbers for the
same point, which is what the determinism contract of the runner relies on.
"""

from __future__ import annotations

import numpy as np

__all__ = ["rng_from"]

_MASK64 = (1 << 64) - 1


def rng_from(seed: int, point_index: int = 0, stream: int = 0) -> np.random.Generator:
    key = np.array([seed & _MASK64, point_index & _MASK64], dtype=np.uint64)
    counter = np.array([stream & _MASK64, 0, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
