"""Counter-based deterministic random streams.

Every random draw in the package is a pure function of (seed, stream
name, counters), so training batches, ray strata and dataset generation
reproduce bitwise for a given seed, independent of call order, worker
count or platform.  The generator is a vectorized splitmix64 hash.
"""

import numpy as np

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)


def _splitmix64(x):
    x = (x + _GOLDEN) & _U64(0xFFFFFFFFFFFFFFFF)
    x ^= x >> _U64(30)
    x *= _MIX1
    x ^= x >> _U64(27)
    x *= _MIX2
    x ^= x >> _U64(31)
    return x


def _fnv1a64(text: str) -> np.uint64:
    # Stable string hash (Python's hash() is salted per process).
    h = np.uint64(0xCBF29CE484222325)
    for b in text.encode("utf-8"):
        h = (h ^ _U64(b)) * _U64(0x100000001B3)
    return h


class Stream:
    """A named substream of the global seed.

    ``uniform`` maps integer counters to floats in [0, 1).  Counters may
    be any integer array; identical (seed, name, counter) always yields
    the identical value.
    """

    def __init__(self, seed: int, name: str, *indices: int):
        key = _splitmix64(_U64(seed & 0xFFFFFFFFFFFFFFFF) ^ _fnv1a64(name))
        for ix in indices:
            key = _splitmix64(key ^ _U64(ix & 0xFFFFFFFFFFFFFFFF))
        self.key = key

    def raw(self, counters) -> np.ndarray:
        c = np.asarray(counters, dtype=np.uint64)
        return _splitmix64(c ^ self.key)

    def uniform(self, counters) -> np.ndarray:
        # 53 mantissa bits -> [0, 1)
        return (self.raw(counters) >> _U64(11)).astype(np.float64) * (2.0**-53)

    def integers(self, counters, bound: int) -> np.ndarray:
        """Integers in [0, bound) with negligible modulo bias for bound << 2^64."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return (self.raw(counters) % _U64(bound)).astype(np.int64)
