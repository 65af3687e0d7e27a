"""Deterministic 64-bit random generator (SplitMix64).

The generator is counter-based: the k-th output is a pure function of
(seed, k), which makes the scalar and vectorized paths produce the same
stream.  Constants are the standard SplitMix64 ones:

    gamma = 0x9E3779B97F4A7C15
    mix:  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
          z ^= z >> 27; z *= 0x94D049BB133111EB
          z ^= z >> 31

Output sequences are part of the reproducibility contract: identical
seeds give bit-identical streams on every platform.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * _MUL1 & _MASK
    z = (z ^ (z >> 27)) * _MUL2 & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Seedable deterministic generator with scalar and array draws."""

    def __init__(self, seed: int):
        self._seed = seed & _MASK
        self._counter = 0

    def next_u64(self) -> int:
        self._counter += 1
        return _mix((self._seed + self._counter * _GAMMA) & _MASK)

    def next_u64_array(self, n: int) -> np.ndarray:
        ks = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            z = np.uint64(self._seed) + ks * np.uint64(_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
            return z ^ (z >> np.uint64(31))

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def random_array(self, n: int) -> np.ndarray:
        return (self.next_u64_array(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, n: int) -> int:
        """Integer in [0, n). Modulo reduction; bias is negligible for n << 2^64."""
        if n <= 0:
            raise ValueError("randint needs n >= 1")
        return self.next_u64() % n

    def shuffle(self, seq: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.randint(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def normal_array(self, n: int, sigma: float = 1.0) -> np.ndarray:
        """n Gaussian samples via Box-Muller on consecutive uniform pairs."""
        m = (n + 1) // 2
        u1 = self.random_array(m)
        u2 = self.random_array(m)
        u1 = np.maximum(u1, 2.0**-53)  # avoid log(0)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return sigma * out[:n]
