"""Deterministic 64-bit PRNG (splitmix64) used wherever reproducibility matters.

Python's random module and numpy's generators are stable in practice, but the
analysis results must be reproducible from a seed across platforms and
releases, so the few places that need randomness (isolation forest, synthetic
corpus construction) share this tiny fixed-algorithm stream.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


class SplitMix64:
    """splitmix64 stream; same integer sequence for a seed, everywhere."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        """Float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def below(self, n: int) -> int:
        """Integer in [0, n). Modulo bias is irrelevant at our n (<< 2^64)."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        return self.next_u64() % n

    def choice(self, items):
        return items[self.below(len(items))]


def derive(seed: int, *salts: int) -> int:
    """Fold salts into a seed so sub-streams are independent and stable."""
    rng = SplitMix64(seed)
    out = rng.next_u64()
    for salt in salts:
        out = SplitMix64(out ^ (salt & _MASK)).next_u64()
    return out
