"""Loader for externally fine-tuned classifier bundles.

A bundle is a directory with three files:

``model.onnx``
    The classifier graph in ONNX interchange format, inputs ``input_ids``
    and ``attention_mask`` of shape [batch, max_length] (int64), output
    ``logits`` of shape [batch, n_intents].

``tokenizer.json``
    Word-vocab tokenizer definition: ``{"kind": "word-vocab",
    "lowercase": bool, "token_pattern": regex, "vocab": {token: id},
    "unk_token": str, "pad_token": str, "max_length": int,
    "truncation": "tail"}``.  Encoding lowercases (if set), extracts
    ``token_pattern`` matches in order, maps through the vocab with the
    unk fallback, keeps the first ``max_length`` tokens, and pads to
    exactly ``max_length``.  Empty input encodes as a single unk token.

``metadata.json``
    ``{"intent_ids": [...], "thresholds": {intent_id: float}}`` with
    intent ids listed in the graph's output order.

The external model is opaque: this module never inspects the graph beyond
running it.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from ..core import IntentSchema, IntentVector
from ..errors import BundleError, SchemaMismatchError
from .onnx_rt import GraphRunner

MODEL_FILE = "model.onnx"
TOKENIZER_FILE = "tokenizer.json"
METADATA_FILE = "metadata.json"


class WordVocabTokenizer:
    """The bundle tokenizer: regex tokens mapped through a fixed vocab."""

    def __init__(self, spec: dict):
        if spec.get("kind") != "word-vocab":
            raise BundleError(f"unsupported tokenizer kind {spec.get('kind')!r}")
        self.lowercase = bool(spec.get("lowercase", True))
        self.pattern = re.compile(spec["token_pattern"])
        self.vocab: dict[str, int] = spec["vocab"]
        self.unk_id = self.vocab[spec["unk_token"]]
        self.pad_id = self.vocab[spec["pad_token"]]
        self.max_length = int(spec["max_length"])
        if self.max_length < 1:
            raise BundleError("tokenizer max_length must be >= 1")

    def tokenize(self, text: str) -> list[str]:
        if self.lowercase:
            text = text.lower()
        return self.pattern.findall(text)

    def count_tokens(self, text: str) -> int:
        return len(self.tokenize(text))

    def encode(self, text: str) -> tuple[np.ndarray, np.ndarray]:
        """(input_ids, attention_mask), both int64 of length max_length."""
        ids = [self.vocab.get(tok, self.unk_id) for tok in self.tokenize(text)]
        if not ids:
            ids = [self.unk_id]
        ids = ids[: self.max_length]
        mask = [1] * len(ids) + [0] * (self.max_length - len(ids))
        ids = ids + [self.pad_id] * (self.max_length - len(ids))
        return np.array(ids, dtype=np.int64), np.array(mask, dtype=np.int64)


class ExternalClassifier:
    """Multi-label scorer backed by a loaded bundle."""

    backend_kind = "external"

    def __init__(self, runner: GraphRunner, tokenizer: WordVocabTokenizer,
                 schema: IntentSchema, thresholds: tuple[float, ...], metadata: dict):
        self.runner = runner
        self.tokenizer = tokenizer
        self.schema = schema
        self.thresholds = thresholds
        self.metadata = metadata

    def predict(self, text: str) -> IntentVector:
        ids, mask = self.tokenizer.encode(text)
        try:
            outputs = self.runner.run({"input_ids": ids[None, :], "attention_mask": mask[None, :]})
            logits = np.asarray(outputs["logits"], dtype=np.float64)[0]
        except (KeyError, ValueError, IndexError) as exc:
            raise BundleError(f"bundle inference failed: {exc}") from exc
        if logits.shape != (len(self.schema),):
            raise BundleError(f"logits shape {logits.shape} does not match {len(self.schema)} intents")
        scores = 1.0 / (1.0 + np.exp(-logits))
        return IntentVector(tuple(float(min(max(s, 0.0), 1.0)) for s in scores), kind="score")

    def count_tokens(self, text: str) -> int:
        return self.tokenizer.count_tokens(text)


def load_external(path: str | Path, schema: IntentSchema) -> ExternalClassifier:
    """Load a bundle directory and validate it against the run schema."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model bundle not found: {path}")
    if not path.is_dir():
        raise BundleError(f"a model bundle is a directory, got a file: {path}")
    for required in (MODEL_FILE, TOKENIZER_FILE, METADATA_FILE):
        if not (path / required).exists():
            raise BundleError(f"bundle {path} is missing {required}")
    try:
        metadata = json.loads((path / METADATA_FILE).read_text(encoding="utf-8"))
        tokenizer = WordVocabTokenizer(json.loads((path / TOKENIZER_FILE).read_text(encoding="utf-8")))
        runner = GraphRunner((path / MODEL_FILE).read_bytes())
    except (json.JSONDecodeError, KeyError, TypeError, re.error) as exc:
        raise BundleError(f"bundle {path} is corrupt: {exc}") from exc

    intent_ids = tuple(metadata.get("intent_ids", ()))
    if intent_ids != schema.ids:
        raise SchemaMismatchError(
            f"bundle intent order {intent_ids} does not match run schema {schema.ids}"
        )
    threshold_map = metadata.get("thresholds", {})
    thresholds = tuple(float(threshold_map.get(i, 0.5)) for i in schema.ids)
    expected_inputs = {"input_ids", "attention_mask"}
    if set(runner.input_names) != expected_inputs:
        raise BundleError(f"bundle graph inputs {runner.input_names} != {sorted(expected_inputs)}")
    if "logits" not in runner.output_names:
        raise BundleError(f"bundle graph outputs {runner.output_names} lack 'logits'")
    return ExternalClassifier(runner, tokenizer, schema, thresholds, metadata)
