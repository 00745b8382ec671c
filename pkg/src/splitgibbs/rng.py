"""Reproducible random streams.

Every chain or replicate draws from its own Philox (counter-based) generator
keyed by ``(seed, stream_id)`` through :class:`numpy.random.SeedSequence`.
Identical pairs give identical draw sequences on every platform numpy
supports; distinct stream ids are independent by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1

# synthetic observations draw from stream ids at or above this offset so they
# never share a stream with a chain (chains use small ids)
DATA_STREAM = 1 << 32


@dataclass(frozen=True)
class RandomStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)):
            raise TypeError("seed must be an integer")
        if self.stream_id < 0:
            raise ValueError("stream_id must be non-negative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed) & _MASK64, spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, stream_id: int) -> "RandomStream":
        return RandomStream(self.seed, stream_id)


def make_rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Shortcut for ``RandomStream(seed, stream_id).generator()``."""
    return RandomStream(seed, stream_id).generator()
