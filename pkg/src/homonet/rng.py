"""Named random streams.

Every random draw in the package comes from a stream keyed by
``(master seed, purpose, index)``, so results never depend on worker
count or on the order in which independent items are processed.
"""

import zlib

import numpy as np


def purpose_key(purpose):
    return zlib.crc32(purpose.encode("utf-8"))


def stream(seed, purpose, index=0):
    """Return an independent ``numpy.random.Generator`` for one item."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(purpose_key(purpose), int(index)))
    return np.random.Generator(np.random.PCG64(ss))
