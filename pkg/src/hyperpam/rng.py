"""Portable deterministic randomness.

SplitMix64 with labeled sub-streams. Pure 64-bit integer arithmetic, so a
seed produces the same sequence on every platform and Python version;
labeled splits keep entity classes independent (changing how many resources
are drawn never perturbs the user stream).
"""

from __future__ import annotations

import bisect
import math

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK
    return h


class Rng:
    """SplitMix64 stream."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def split(self, label: str) -> "Rng":
        """Derive an independent stream named by ``label``."""
        return Rng(_mix64(self._state ^ _fnv1a64(label)))

    def u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return _mix64(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.u64() >> 11) * (1.0 / (1 << 53))

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], inclusive."""
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.u64() % (hi - lo + 1)

    def choice(self, seq):
        if not seq:
            raise ValueError("empty sequence")
        return seq[self.u64() % len(seq)]

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.u64() % (i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, seq, k: int) -> list:
        """k distinct elements, order determined by the stream."""
        if k > len(seq):
            raise ValueError("sample larger than population")
        pool = list(seq)
        self.shuffle(pool)
        return pool[:k]


_ZIPF_CACHE: dict[tuple[int, float], list[float]] = {}


def zipf_cdf(k_max: int, s: float) -> list[float]:
    key = (k_max, s)
    cdf = _ZIPF_CACHE.get(key)
    if cdf is None:
        weights = [k ** (-s) for k in range(1, k_max + 1)]
        total = math.fsum(weights)
        acc, cdf = 0.0, []
        for w in weights:
            acc += w
            cdf.append(acc / total)
        _ZIPF_CACHE[key] = cdf
    return cdf


def zipf_sample(rng: Rng, k_max: int, s: float) -> int:
    """Draw from {1..k_max} with P(k) proportional to k^(-s)."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if s <= 0:
        raise ValueError("s must be > 0")
    if k_max == 1:
        rng.u64()  # keep stream position independent of k_max
        return 1
    return bisect.bisect_right(zipf_cdf(k_max, s), rng.random()) + 1
