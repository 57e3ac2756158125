"""Positional (counter-derived) random streams.

Every work unit gets its own generator built from the master seed and an
integer key, so results never depend on execution order or thread count.
"""

import numpy as np

# Namespaces keep Haar draws and phase draws from ever sharing a stream.
HAAR = 1
PHASES = 2
EXTRA = 3


def stream(seed, *key):
    """Return an independent Philox generator for ``(seed, *key)``.

    Parameters
    ----------
    seed : int
        Master seed (any non-negative integer, typically 64-bit).
    *key : int
        Position of the work unit, e.g. ``(PHASES, matrix, subensemble)``.
    """
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))
