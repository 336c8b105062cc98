"""Pluggable multi-label intent classifiers.

Two backends answer the same ``predict(text) -> score IntentVector``
contract: the trainable hashed n-gram baseline, and externally fine-tuned
transformer bundles loaded through the ONNX interchange format.
``load_model`` dispatches on the path: a directory is a bundle, a file is
a serialized baseline.
"""

from __future__ import annotations

from pathlib import Path

from ..core import IntentSchema
from ..evaluation import decide
from .baseline import BaselineClassifier, EvalSnapshot, TrainConfig, gradient_check, train_baseline
from .external import ExternalClassifier, WordVocabTokenizer, load_external
from .features import DEFAULT_BUCKETS, hashed_features, tokenize

__all__ = [
    "BaselineClassifier",
    "DEFAULT_BUCKETS",
    "EvalSnapshot",
    "ExternalClassifier",
    "TrainConfig",
    "WordVocabTokenizer",
    "decide",
    "gradient_check",
    "hashed_features",
    "load_external",
    "load_model",
    "tokenize",
    "train_baseline",
]


def load_model(path: str | Path, schema: IntentSchema):
    """Load either backend from a path (bundle directory or baseline file)."""
    path = Path(path)
    if path.is_dir():
        return load_external(path, schema)
    return BaselineClassifier.load(path, schema)
