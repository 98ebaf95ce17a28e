"""Portable counter-based pseudorandom numbers.

Draw ``i`` of a stream seeded with ``seed`` is the SplitMix64 finalizer applied
to ``seed + (i + 1) * 0x9E3779B97F4A7C15`` (mod 2**64).  Uniforms keep the top
53 bits; normals use the cosine branch of Box-Muller on two consecutive
uniforms.  Everything is plain uint64 arithmetic, so streams are identical on
every platform with IEEE doubles.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def splitmix64(counters):
    """Finalizer of SplitMix64, vectorized over a uint64 array."""
    z = np.asarray(counters, dtype=np.uint64).copy()
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= MIX1
        z ^= z >> np.uint64(27)
        z *= MIX2
        z ^= z >> np.uint64(31)
    return z


class SplitMix64:
    """Sequential view over the counter stream of one seed."""

    def __init__(self, seed):
        self.seed = int(seed) & _MASK64
        self.counter = 0

    def bits(self, size):
        size = int(size)
        idx = np.arange(self.counter + 1, self.counter + 1 + size, dtype=np.uint64)
        with np.errstate(over="ignore"):
            raw = np.uint64(self.seed) + idx * GOLDEN
        self.counter += size
        return splitmix64(raw)

    def uniform(self, size=None, low=0.0, high=1.0):
        """Uniform doubles on [low, high)."""
        n = 1 if size is None else int(np.prod(size))
        u = (self.bits(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        out = low + (high - low) * u
        return float(out[0]) if size is None else out.reshape(size)

    def normal(self, size=None):
        n = 1 if size is None else int(np.prod(size))
        b = self.bits(2 * n)
        # (k + 1) * 2**-53 lies in (0, 1], so the log is finite.
        u1 = ((b[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (b[1::2] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        return float(z[0]) if size is None else z.reshape(size)

    def permutation(self, n):
        """Permutation of range(n) from a stable sort of random 64-bit keys."""
        return np.argsort(self.bits(n), kind="stable")
