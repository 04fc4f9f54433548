"""Platform-stable SplitMix64 random streams.

The generator is counter based: the i-th output of a stream with seed ``s``
is ``mix(s + (i + 1) * GAMMA)``, so every draw is a pure function of
``(seed, position)`` and identical on every platform with 64-bit unsigned
wraparound arithmetic.
"""

from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def splitmix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to uint64 counters."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class Rng:
    """SplitMix64 stream.

    >>> Rng(0).next_u64(1)[0] == 0xE220A8397B1DCDAF
    True
    """

    algorithm = "splitmix64"

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self.position = 0

    def next_u64(self, n: int) -> np.ndarray:
        idx = np.arange(self.position + 1, self.position + n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            counters = np.uint64(self.seed) + idx * GAMMA
        self.position += n
        return splitmix64(counters)

    def random(self, shape) -> np.ndarray:
        """Doubles in [0, 1) with 53 random bits each."""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        n = int(np.prod(shape, dtype=np.int64))
        bits = self.next_u64(n) >> np.uint64(11)
        return (bits.astype(np.float64) * 2.0**-53).reshape(shape)

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        return low + (high - low) * self.random(shape)

    def normal(self, shape) -> np.ndarray:
        """Standard normals by the Box-Muller transform."""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        n = int(np.prod(shape, dtype=np.int64))
        m = (n + 1) // 2
        u1 = 1.0 - self.random(m)  # (0, 1]
        u2 = self.random(m)
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
        return out[:n].reshape(shape)

    def fork(self, stream: int) -> "Rng":
        """Independent child stream keyed by an integer label."""
        key = int(splitmix64(np.array([self.seed ^ (int(stream) & _MASK64)], dtype=np.uint64))[0])
        return Rng(key)
