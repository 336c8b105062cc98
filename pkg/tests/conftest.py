"""Shared fixtures and deterministic random-data helpers."""

from __future__ import annotations

import pytest

from convo_gate.core import Conversation, IntentSchema, IntentVector, Turn, default_schema
from convo_gate.rng import Pcg32

_WORDS = (
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
    "india", "juliet", "kilo", "lima", "mike", "november", "oscar", "papa",
)

_UNICODE_WORDS = (
    "héllo", "naïve", "日本語", "ข้อความ", "שלום", "🙂", "Ωμέγα", "zürich",
    "café", "niño", "中文", "émission",
)


@pytest.fixture
def schema() -> IntentSchema:
    return default_schema()


def random_text(rng: Pcg32, max_words: int = 6, unicode_pool: bool = False) -> str:
    pool = _UNICODE_WORDS if unicode_pool else _WORDS
    n = rng.randint(1, max_words)
    return " ".join(pool[rng.bounded(len(pool))] for _ in range(n))


def random_labels(rng: Pcg32, width: int) -> IntentVector:
    return IntentVector(tuple(rng.bounded(2) for _ in range(width)), kind="binary")


def random_conversation(rng: Pcg32, schema: IntentSchema, conv_id: str,
                        min_turns: int = 1, max_turns: int = 8,
                        labeled: bool = True, unicode_pool: bool = False) -> Conversation:
    n_turns = rng.randint(min_turns, max_turns)
    turns = tuple(
        Turn(
            speaker=f"spk{rng.bounded(4)}",
            text=random_text(rng, unicode_pool=unicode_pool),
            labels=random_labels(rng, len(schema)) if labeled else None,
        )
        for _ in range(n_turns)
    )
    labels = None
    if labeled:
        agg = [0] * len(schema)
        for t in turns:
            for i, v in enumerate(t.labels.values):
                agg[i] |= int(v)
        labels = IntentVector(tuple(agg), kind="binary")
    return Conversation(id=conv_id, source_dataset="fixture", turns=turns, labels=labels)
