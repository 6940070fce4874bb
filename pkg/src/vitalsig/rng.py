"""Portable pseudo-random source for the synthetic-signal generators.

The generator is SplitMix64 (Steele, Lea & Flood 2014) used as a counter
stream, so the k-th draw of a stream seeded with ``s`` is::

    z = s + (k + 1) * 0x9E3779B97F4A7C15            (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)

Derived variates are defined so that any implementation reproduces them:

* uniform on [0, 1): ``(z >> 11) * 2**-53``
* standard normal: Box-Muller on consecutive uniform pairs ``(u1, u2)``
  with ``u1 -> 1 - u1`` so that it lies in (0, 1]; each pair yields
  ``r*cos(2*pi*u2)`` then ``r*sin(2*pi*u2)`` with ``r = sqrt(-2 ln u1)``.
* integer in [0, n): ``floor(uniform * n)``.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Counter-based SplitMix64 stream with vectorised draws."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self.counter = 0

    def next_u64(self, n: int) -> np.ndarray:
        k = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + k * _GOLDEN
            return _mix(z)

    def random(self, n: int) -> np.ndarray:
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int, loc: float = 0.0, scale: float = 1.0) -> np.ndarray:
        m = (n + 1) // 2
        u = self.random(2 * m)
        u1 = 1.0 - u[0::2]
        u2 = u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(2.0 * np.pi * u2)
        out[1::2] = r * np.sin(2.0 * np.pi * u2)
        return loc + scale * out[:n]

    def uniform(self, low: float, high: float, n: int) -> np.ndarray:
        return low + (high - low) * self.random(n)

    def integers(self, n_values: int, n: int) -> np.ndarray:
        return np.floor(self.random(n) * n_values).astype(np.int64)

    def spawn(self, key: int) -> "SplitMix64":
        """Independent child stream derived deterministically from ``key``."""
        with np.errstate(over="ignore"):
            child = _mix(np.array([self.seed ^ (int(key) & _MASK64)], dtype=np.uint64)
                         + _GOLDEN)
        return SplitMix64(int(child[0]))
