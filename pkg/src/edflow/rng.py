"""Portable deterministic random number generator.

The synthetic-data fixtures must reproduce byte-for-byte across runs and
platforms, so the generator is pinned to a named algorithm instead of
whatever the host numpy version ships: xoshiro256** for the stream, with
the four 64-bit state words seeded from a single integer via splitmix64.
All integer arithmetic is exact; the float transforms (log, sqrt, cos)
use libm and are exact in practice on IEEE-754 doubles.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_TWO_PI = 2.0 * math.pi


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


class Xoshiro256StarStar:
    """xoshiro256** 1.0 (Blackman & Vigna), seeded via splitmix64."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int):
        state = seed & _MASK64
        state, self._s0 = _splitmix64(state)
        state, self._s1 = _splitmix64(state)
        state, self._s2 = _splitmix64(state)
        state, self._s3 = _splitmix64(state)

    def next_uint64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        x = (s1 * 5) & _MASK64
        result = ((((x << 7) | (x >> 57)) & _MASK64) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def random(self) -> float:
        """Uniform double in [0, 1) using the top 53 bits."""
        return (self.next_uint64() >> 11) * 2.0**-53

    def uniform_open(self) -> float:
        """Uniform double in (0, 1], safe as a log argument."""
        return ((self.next_uint64() >> 11) + 1) * 2.0**-53

    def exponential(self, rate: float) -> float:
        return -math.log(self.uniform_open()) / rate

    def normal(self) -> float:
        """Standard normal via Box-Muller; one draw consumes two uniforms."""
        u1 = self.uniform_open()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)

    def randint_below(self, n: int) -> int:
        """Integer in [0, n) by rejection, bias-free."""
        limit = _MASK64 - (_MASK64 % n)
        while True:
            u = self.next_uint64()
            if u < limit:
                return u % n

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), by partial Fisher-Yates; sorted."""
        pool = list(range(n))
        for i in range(k):
            j = i + self.randint_below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:k])
