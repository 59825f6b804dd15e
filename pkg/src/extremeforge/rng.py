"""Deterministic random number generation.

All stochastic effects draw from a splitmix64 stream so that identical seeds
give identical output on every platform, independent of process scheduling.
Per-job seeds are derived by hashing a string key into a base seed, which
keeps parallel synthesis runs order-independent.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


class SplitMix64:
    """splitmix64 with 53-bit uniform floats in [0, 1)."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        x = self.state
        x = ((x ^ (x >> 30)) * _MIX1) & MASK64
        x = ((x ^ (x >> 27)) * _MIX2) & MASK64
        x = x ^ (x >> 31)
        return x

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def next_range(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()


def derive_seed(base_seed: int, key: str) -> int:
    """Mix a string key into a base seed (FNV-1a over the UTF-8 bytes)."""
    h = _FNV_OFFSET
    for b in key.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & MASK64
    return (base_seed ^ h) & MASK64
