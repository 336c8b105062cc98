"""Stable non-cryptographic hashing (FNV-1a, 64-bit).

Python's builtin ``hash`` is salted per process; feature hashing and
deterministic template selection need a hash that is a pure function of
its bytes on every platform.
"""

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes, seed: int = 0) -> int:
    """FNV-1a over ``seed`` (8 bytes little-endian) followed by ``data``."""
    h = _FNV_OFFSET
    for b in seed.to_bytes(8, "little", signed=False) + data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h
