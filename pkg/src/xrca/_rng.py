"""Seeded, platform-independent randomness helpers.

Everything here is pure 64-bit integer arithmetic so that synthetic
corpora, load workloads and color assignment are bit-identical across
runs, platforms and Python builds.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_TWO64 = float(1 << 64)


def mix64(z: int) -> int:
    """SplitMix64 finalizer (Steele, Lea, Flood 2014)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Counter-based SplitMix64 generator."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & MASK64
        return mix64(self._state)

    def below(self, n: int) -> int:
        """Uniform-ish integer in [0, n). Modulo bias is < n / 2**64."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def chance(self, p: float) -> bool:
        """True with probability p (p is clamped to [0, 1])."""
        if p <= 0.0:
            return False
        if p >= 1.0:
            return True
        return self.next_u64() < int(p * _TWO64)

    def choice(self, seq):
        return seq[self.below(len(seq))]


def stream(seed: int, index: int) -> SplitMix64:
    """Independent generator for (seed, index); streams never collide in
    practice because the 64-bit mixed keys are distinct per index."""
    return SplitMix64(mix64((seed + (index + 1) * _GOLDEN) & MASK64))


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash; the stable string hash used for palette keys
    and the synthesized-tone frequency."""
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h
