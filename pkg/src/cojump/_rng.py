"""Deterministic random-stream derivation.

Every random draw in the package flows from a single integer seed through
counter-based Philox streams keyed by structured integer paths, e.g.
``(seed, replication, STREAM_JUMPS)``.  Streams for different paths are
statistically independent, and results are reproducible regardless of how
work is split across worker processes.
"""

import numpy as np

# Stream tags appended to seed paths so that independent concerns never
# share a stream even when they run on the same replication.
STREAM_PATH = 0
STREAM_JUMPS = 1
STREAM_NOISE = 2
STREAM_BOOTSTRAP = 3


def stream_rng(*path: int) -> np.random.Generator:
    """Return a Generator for the given integer key path.

    The same path always produces the same stream; distinct paths produce
    independent streams.
    """
    if not path:
        raise ValueError("stream path must contain at least one integer")
    # SeedSequence wants non-negative entropy; fold negatives through 64-bit
    # two's complement so any int key is usable.
    entropy = tuple(int(p) & 0xFFFFFFFFFFFFFFFF for p in path)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
