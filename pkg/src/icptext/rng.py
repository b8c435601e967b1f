"""Deterministic 64-bit RNG used for corpus splits and masking.

The generator is SplitMix64 (Steele, Lea & Flood's mix64 finalizer driven
by a Weyl sequence with increment 0x9E3779B97F4A7C15).  It is pinned here,
rather than delegating to a platform RNG, so that splits and mask positions
reproduce bit-for-bit across machines and across reimplementations: anyone
can re-derive them from the algorithm below and a 64-bit seed.

Bounded draws use rejection sampling on the raw 64-bit output, which is
exactly uniform (no modulo bias).  Shuffling is the classic Fisher-Yates
walk from the top index down.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit value."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


class SplitMix64:
    """SplitMix64 stream: state walks a Weyl sequence, outputs are mixed."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GAMMA) & MASK64
        return mix64(self._state)

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound), by rejection on the top range."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, drawing j in [0, i] for i = n-1..1."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]


def substream(seed: int, index: int) -> SplitMix64:
    """Independent stream for (seed, index), e.g. one stream per sentence.

    The index is avalanched before being folded into the seed so that
    consecutive indices land in unrelated regions of the state space.
    """
    return SplitMix64((seed ^ mix64((index + 1) & MASK64)) & MASK64)
