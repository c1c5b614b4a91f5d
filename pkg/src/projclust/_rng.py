"""Seeded random-number streams.

Every randomized operation in this package draws from a generator obtained
through :func:`rng_stream`.  A (seed, stream) pair fully determines the
stream, and distinct stream indices under the same seed are statistically
independent, so per-trial work can run in any order (or in parallel) and
still produce identical results.
"""

import numpy as np


def rng_stream(seed, stream=0):
    """Return the generator for (seed, stream).

    Parameters
    ----------
    seed : int
        Non-negative base seed for the whole run.
    stream : int
        Non-negative stream index; trial ``i`` of a multi-trial experiment
        uses stream ``i``.
    """
    seed = int(seed)
    stream = int(stream)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    if stream < 0:
        raise ValueError("stream index must be non-negative")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))
