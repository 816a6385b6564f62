"""Named, reproducible random sub-streams derived from one integer seed."""

from __future__ import annotations

import zlib

import numpy as np


def _key(name: str | int) -> int:
    if isinstance(name, (int, np.integer)):
        return int(name)
    return zlib.crc32(str(name).encode())


def substream(seed: int, *names: str | int) -> np.random.Generator:
    """Return a generator for the sub-stream ``seed / names[0] / names[1] ...``.

    Streams with different name paths are statistically independent, and the
    same path always yields the same stream, independent of call order.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(n) for n in names))
    return np.random.Generator(np.random.PCG64(ss))
