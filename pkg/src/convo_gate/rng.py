"""Portable deterministic random source.

Every sampling decision in this package flows through PCG32 (O'Neill's
pcg32, the ``PCG-XSH-RR`` variant with 64-bit state and 32-bit output) so
that a seed reproduces the same draws on any platform and in any other
implementation of the generator.  The reference behaviour is pinned by
test vectors from the pcg32 demo program.
"""

from __future__ import annotations

import hashlib

_MULT = 6364136223846793005
_MASK64 = (1 << 64) - 1


class Pcg32:
    """pcg32 generator seeded with an (initstate, initseq) pair."""

    __slots__ = ("state", "inc")

    def __init__(self, seed: int, stream: int = 0):
        self.state = 0
        self.inc = (((stream << 1) | 1)) & _MASK64
        self._next_raw()
        self.state = (self.state + (seed & _MASK64)) & _MASK64
        self._next_raw()

    def _next_raw(self) -> int:
        old = self.state
        self.state = (old * _MULT + self.inc) & _MASK64
        return old

    def next_u32(self) -> int:
        old = self._next_raw()
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & 0xFFFFFFFF

    def bounded(self, n: int) -> int:
        """Unbiased integer in [0, n), by rejection below the threshold."""
        if n <= 0:
            raise ValueError("bound must be positive")
        threshold = (1 << 32) % n
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % n

    def uniform(self) -> float:
        """Float in [0, 1) with 32 bits of resolution."""
        return self.next_u32() / 4294967296.0

    def randint(self, lo: int, hi: int) -> int:
        """Integer in the inclusive range [lo, hi]."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + self.bounded(hi - lo + 1)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.bounded(i + 1)
            items[i], items[j] = items[j], items[i]


def derive_stream(seed: int, key: str) -> Pcg32:
    """Generator for a named substream of ``seed``.

    The substream is keyed by sha256(key): the first 8 digest bytes
    (big-endian) are XORed into the seed and the next 8 select the pcg32
    stream, so independent keys give statistically independent sequences
    while remaining reproducible from (seed, key) alone.
    """
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    initstate = (seed ^ int.from_bytes(digest[:8], "big")) & _MASK64
    initseq = int.from_bytes(digest[8:16], "big")
    return Pcg32(initstate, initseq)
