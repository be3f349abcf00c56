"""Counter-based splittable random streams.

Every stochastic operation takes either an integer master seed or an
existing ``numpy.random.Generator``.  Independent substreams are derived
from (seed, *path) coordinates with Philox, so results never depend on
the order in which substreams are consumed (e.g. under a thread pool).
"""

from __future__ import annotations

import numpy as np

RandomState = "int | np.random.Generator"


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the stream at coordinates ``path``."""
    ss = np.random.SeedSequence(entropy=int(master_seed),
                                spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed: "int | np.random.Generator") -> np.random.Generator:
    """Coerce an int seed (or pass through a Generator) to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return substream(int(seed))
