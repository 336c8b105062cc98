"""PCG32 random source, draw-compatible with the gateway toolkit.

The toolkit and this trainer must produce identical window-augmentation
draws for identical seeds, so both implement the same generator (pcg32,
PCG-XSH-RR, 64-bit state) and the same sha256-keyed substream derivation.
"""

from __future__ import annotations

import hashlib

_MULT = 6364136223846793005
_MASK64 = (1 << 64) - 1


class Pcg32:
    __slots__ = ("state", "inc")

    def __init__(self, seed: int, stream: int = 0):
        self.state = 0
        self.inc = ((stream << 1) | 1) & _MASK64
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
        if n <= 0:
            raise ValueError("bound must be positive")
        threshold = (1 << 32) % n
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % n

    def uniform(self) -> float:
        return self.next_u32() / 4294967296.0

    def randint(self, lo: int, hi: int) -> int:
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + self.bounded(hi - lo + 1)

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.bounded(i + 1)
            items[i], items[j] = items[j], items[i]


def derive_stream(seed: int, key: str) -> Pcg32:
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    initstate = (seed ^ int.from_bytes(digest[:8], "big")) & _MASK64
    initseq = int.from_bytes(digest[8:16], "big")
    return Pcg32(initstate, initseq)
