"""Word-vocab tokenizer: built from the training corpus, shipped in bundles.

The JSON definition is the interchange contract the gateway toolkit's
bundle loader implements: lowercase (optional), regex token extraction,
vocab lookup with unk fallback, first-max_length tokens kept, padded to
exactly max_length; empty input encodes as a single unk token.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from pathlib import Path

import numpy as np

TOKEN_PATTERN = r"[a-z0-9']+|[^a-z0-9'\s]"
PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"


class WordVocabTokenizer:
    def __init__(self, vocab: dict[str, int], max_length: int, lowercase: bool = True,
                 token_pattern: str = TOKEN_PATTERN):
        self.vocab = vocab
        self.max_length = max_length
        self.lowercase = lowercase
        self.token_pattern = token_pattern
        self._regex = re.compile(token_pattern)
        self.pad_id = vocab[PAD_TOKEN]
        self.unk_id = vocab[UNK_TOKEN]

    @classmethod
    def train(cls, texts: list[str], vocab_size: int, max_length: int) -> "WordVocabTokenizer":
        """Frequency vocab over the corpus, ties broken lexically for determinism."""
        counts: Counter[str] = Counter()
        regex = re.compile(TOKEN_PATTERN)
        for text in texts:
            counts.update(regex.findall(text.lower()))
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        vocab = {PAD_TOKEN: 0, UNK_TOKEN: 1}
        for token, _ in ranked[: max(vocab_size - 2, 0)]:
            vocab[token] = len(vocab)
        return cls(vocab, max_length=max_length)

    def tokenize(self, text: str) -> list[str]:
        if self.lowercase:
            text = text.lower()
        return self._regex.findall(text)

    def encode(self, text: str) -> tuple[np.ndarray, np.ndarray]:
        ids = [self.vocab.get(tok, self.unk_id) for tok in self.tokenize(text)]
        if not ids:
            ids = [self.unk_id]
        ids = ids[: self.max_length]
        mask = [1] * len(ids) + [0] * (self.max_length - len(ids))
        ids = ids + [self.pad_id] * (self.max_length - len(ids))
        return np.array(ids, dtype=np.int64), np.array(mask, dtype=np.int64)

    def encode_batch(self, texts: list[str]) -> tuple[np.ndarray, np.ndarray]:
        pairs = [self.encode(t) for t in texts]
        return np.stack([p[0] for p in pairs]), np.stack([p[1] for p in pairs])

    def to_dict(self) -> dict:
        return {
            "kind": "word-vocab",
            "lowercase": self.lowercase,
            "token_pattern": self.token_pattern,
            "vocab": self.vocab,
            "unk_token": UNK_TOKEN,
            "pad_token": PAD_TOKEN,
            "max_length": self.max_length,
            "truncation": "tail",
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "WordVocabTokenizer":
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
        if spec.get("kind") != "word-vocab":
            raise ValueError(f"unsupported tokenizer kind {spec.get('kind')!r}")
        return cls(spec["vocab"], max_length=int(spec["max_length"]),
                   lowercase=bool(spec.get("lowercase", True)),
                   token_pattern=spec.get("token_pattern", TOKEN_PATTERN))
