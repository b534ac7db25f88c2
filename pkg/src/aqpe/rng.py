"""Keyed random streams.

Every stochastic operation receives an :class:`RngStream`.  A stream is
identified by a base seed plus a tuple of integer keys, and children are
derived by appending keys.  Because derivation depends only on the key path
(never on how many numbers a sibling consumed or which worker ran it), results
are reproducible under any parallel layout.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


class RngStream:
    """A reproducible random stream addressed by ``(seed, keys)``.

    Parameters
    ----------
    seed : int
        Base seed (reduced to 64 bits).
    keys : tuple of int
        Stream identifier path.  ``RngStream(s, (1, 2))`` is the same stream as
        ``RngStream(s).child(1).child(2)``.
    """

    __slots__ = ("seed", "keys", "_gen")

    def __init__(self, seed: int, keys: tuple[int, ...] = ()):
        self.seed = int(seed) & _MASK64
        self.keys = tuple(int(k) & _MASK64 for k in keys)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.keys)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def child(self, *keys: int) -> "RngStream":
        return RngStream(self.seed, self.keys + tuple(keys))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, keys={self.keys})"
