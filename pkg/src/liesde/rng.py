"""Keyed counter-based random streams.

Every trajectory owns one :class:`RngStream`. Streams are Philox-4x64
generators keyed by ``(seed, stream_id)``, so distinct ids give independent
sequences without any coordination, and a given key reproduces the same
bits on every platform numpy supports. Normal variates use numpy's ziggurat.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _as_u64(value, name: str) -> int:
    v = int(value)
    if v != value or not 0 <= v <= _MASK64:
        raise ValueError(f"{name} must be an integer in [0, 2**64), got {value!r}")
    return v


class RngStream:
    """Independent, reproducible stream of random variates.

    Parameters
    ----------
    seed : int
        64-bit seed shared by a family of streams.
    stream_id : int
        64-bit stream index. Ensembles use ``base + trajectory_index``.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int = 0, stream_id: int = 0):
        self.seed = _as_u64(seed, "seed")
        self.stream_id = _as_u64(stream_id, "stream_id")
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def standard_normal(self, size=None) -> np.ndarray:
        return self._gen.standard_normal(size)

    def uniform(self, size=None) -> np.ndarray:
        return self._gen.random(size)

    def child(self, stream_offset: int) -> "RngStream":
        """Stream with the same seed and ``stream_id + stream_offset``."""
        return RngStream(self.seed, (self.stream_id + int(stream_offset)) & _MASK64)
