"""Named random sub-streams derived from one master seed."""

from __future__ import annotations

import zlib

import numpy as np


def _key(name: str | int) -> int:
    return name if isinstance(name, int) else zlib.crc32(name.encode("utf-8"))


def substream(seed: int, *names: str | int) -> np.random.Generator:
    """Generator for the path ``names`` below ``seed``.

    The same path always gives the same stream, independent of which other
    streams were drawn, so single cells or sessions can be rerun alone.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(_key(n) for n in names))
    return np.random.default_rng(ss)
