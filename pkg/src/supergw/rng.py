"""Named, replica-indexed random streams.

Every stream is a Philox counter-based generator keyed by
``(master seed, *path)``, where path components may be integers or names.
Two different paths give statistically independent streams, and a stream
does not depend on how many other streams were drawn before it, so replicas
can be run in any order or in parallel.
"""
from __future__ import annotations

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream indices must be nonnegative")
        return int(part)
    return zlib.crc32(str(part).encode()) | (1 << 32)


def stream(seed: int, *path) -> np.random.Generator:
    """Generator for the stream addressed by ``path`` under master ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_part(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed_or_rng, *path) -> np.random.Generator:
    """Accept a Generator (returned as is) or an integer seed (keyed by ``path``)."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return stream(int(seed_or_rng), *path)
