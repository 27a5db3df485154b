"""Seeded pseudo-random generator used by all experiment sampling.

The generator is xorshift64* (Vigna's variant): 64-bit state s, one step is

    s ^= s >> 12;  s ^= (s << 25) & (2^64-1);  s ^= s >> 27
    output = (s * 2685821657736338717) mod 2^64

Bulk draws use one xorshift step as a block seed b and then the stateless
splitmix64 mix of b + (i+1) * 0x9E3779B97F4A7C15 for lane i, which vectorizes
because lanes are independent.  Both recurrences are spelled out so a
reimplementation in any language reproduces the exact sample streams from a
report's echoed seed.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_MULT = 2685821657736338717

_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_M2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    z = x.astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _SM_M1
    z = (z ^ (z >> np.uint64(27))) * _SM_M2
    return z ^ (z >> np.uint64(31))


class Xorshift64Star:
    """Deterministic 64-bit generator; seed 0 is remapped to a fixed odd word."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = (seed & _MASK) or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        s = self.state
        s ^= s >> 12
        s = (s ^ (s << 25)) & _MASK
        s ^= s >> 27
        self.state = s
        return (s * _MULT) & _MASK

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randrange(self, n: int) -> int:
        """Integer in [0, n) without modulo bias."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        # rejection on the top multiple of n
        limit = (_MASK + 1) - ((_MASK + 1) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi] inclusive."""
        return lo + self.randrange(hi - lo + 1)

    def shuffle(self, seq: list) -> None:
        for i in range(len(seq) - 1, 0, -1):
            j = self.randrange(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def uniform_array(self, n: int) -> np.ndarray:
        """n floats in [0, 1): one parent step seeds a splitmix64 counter block."""
        block = np.uint64(self.next_u64())
        lanes = (np.arange(1, n + 1, dtype=np.uint64) * _SM_GAMMA) + block
        with np.errstate(over="ignore"):
            words = _splitmix64(lanes)
        return (words >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def integer_array(self, n: int, bound: int) -> np.ndarray:
        """n integers in [0, bound) by 128-bit multiply-shift of one block."""
        block = np.uint64(self.next_u64())
        lanes = (np.arange(1, n + 1, dtype=np.uint64) * _SM_GAMMA) + block
        with np.errstate(over="ignore"):
            words = _splitmix64(lanes)
        # top 53 bits scaled into [0, bound): bias is < 2^-53 * bound, far
        # below anything the sweeps can resolve
        u = (words >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        return np.minimum((u * bound).astype(np.int64), bound - 1)

    def spawn(self) -> "Xorshift64Star":
        """Child generator with state derived from one step of the parent."""
        return Xorshift64Star(self.next_u64() ^ 0xD2B74407B1CE6E93)
