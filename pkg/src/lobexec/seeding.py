"""Deterministic random-stream derivation.

Every stochastic component draws from its own generator, derived from a
master seed, a purpose tag, and an index. Streams with different tags or
indices are statistically independent, so training and evaluation randomness
never overlap as long as they use different tags.
"""

import zlib

import numpy as np


def rng_stream(master_seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Generator for (master_seed, tag, *indices); same inputs, same stream."""
    entropy = (int(master_seed), zlib.crc32(tag.encode("ascii")), *[int(i) for i in indices])
    return np.random.default_rng(np.random.SeedSequence(entropy))
