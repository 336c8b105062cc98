"""Shared trainer test fixtures.

Cross-component fixtures come from ../../interop/golden (corpus + the
gateway toolkit's label and window-draw outputs on it); trainer tests
re-derive everything with this package's own code.
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from intent_trainer.data import Conversation, read_corpus

REPO_ROOT = Path(__file__).resolve().parents[2]
GOLDEN_DIR = REPO_ROOT / "interop" / "golden"

INTENTS = ["action-triggering", "information-seeking"]


@pytest.fixture(scope="session")
def golden_corpus() -> list[Conversation]:
    path = GOLDEN_DIR / "corpus.jsonl"
    if not path.exists():
        pytest.skip("interop golden corpus not generated")
    return read_corpus(path)


@pytest.fixture(scope="session")
def golden_labels() -> dict:
    path = GOLDEN_DIR / "conversation_labels.json"
    if not path.exists():
        pytest.skip("interop golden labels not generated")
    return json.loads(path.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def golden_window_draws() -> list[dict]:
    path = GOLDEN_DIR / "window_draws.json"
    if not path.exists():
        pytest.skip("interop golden window draws not generated")
    return json.loads(path.read_text(encoding="utf-8"))


def write_line_corpus(path: Path, convs: list[Conversation]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for c in convs:
            fh.write(json.dumps({
                "id": c.id,
                "source_dataset": "fixture",
                "turns": [
                    {"speaker": t.speaker, "text": t.text,
                     **({"labels": t.labels} if t.labels is not None else {})}
                    for t in c.turns
                ],
                **({"labels": c.labels} if c.labels is not None else {}),
            }, ensure_ascii=False) + "\n")
    return path


@pytest.fixture(scope="session")
def corpus_files(tmp_path_factory, golden_corpus):
    """Golden corpus split into train/val line-format files."""
    root = tmp_path_factory.mktemp("corpus")
    train = [c for i, c in enumerate(golden_corpus) if i % 3 != 2]
    val = [c for i, c in enumerate(golden_corpus) if i % 3 == 2]
    return (write_line_corpus(root / "train.jsonl", train),
            write_line_corpus(root / "val.jsonl", val))
