"""Hashed n-gram features for the baseline classifier.

Features are unigram and bigram counts over a simple lexical tokenization
of the rendered model input, hashed into a fixed bucket space with
seeded FNV-1a.  The whole mapping is a pure function of (text, hash seed,
bucket count): identical text always lands in identical buckets.
"""

from __future__ import annotations

import re

import numpy as np

from ..hashing import fnv1a64

DEFAULT_BUCKETS = 1 << 18

# word-ish runs plus individual punctuation marks; question marks matter
_TOKEN_RE = re.compile(r"[a-z0-9']+|[^a-z0-9'\s]")

_BIGRAM_JOIN = "\x1f"


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def hashed_features(text: str, n_buckets: int = DEFAULT_BUCKETS, hash_seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Bucket indices and counts for the text's unigrams and bigrams.

    Returns (indices, counts) with indices sorted and unique.
    """
    tokens = tokenize(text)
    counts: dict[int, float] = {}
    for i, tok in enumerate(tokens):
        bucket = fnv1a64(tok.encode("utf-8"), seed=hash_seed) % n_buckets
        counts[bucket] = counts.get(bucket, 0.0) + 1.0
        if i + 1 < len(tokens):
            bigram = tok + _BIGRAM_JOIN + tokens[i + 1]
            bucket = fnv1a64(bigram.encode("utf-8"), seed=hash_seed) % n_buckets
            counts[bucket] = counts.get(bucket, 0.0) + 1.0
    if not counts:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=np.float64)
    return indices, values
