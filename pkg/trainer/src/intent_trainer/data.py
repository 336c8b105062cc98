"""Corpus reading and sample construction.

Consumes the gateway toolkit's serialized artifacts verbatim: the
conversation line format (one JSON object per line), the run-config YAML
window section, and the OR label rule (a conversation or segment is
positive for an intent as soon as one covered turn is).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .rng import Pcg32

DEFAULT_SEPARATOR = "[SEP]"


@dataclass(frozen=True)
class Turn:
    speaker: str
    text: str
    labels: dict[str, int] | None


@dataclass(frozen=True)
class Conversation:
    id: str
    turns: tuple[Turn, ...]
    labels: dict[str, int] | None


@dataclass(frozen=True)
class WindowConfig:
    min_turns: int = 1
    max_turns: int = 5
    max_segments_per_conversation: int = 2
    batch_probability: float = 0.5

    def __post_init__(self):
        if not (1 <= self.min_turns <= self.max_turns):
            raise ValueError("need 1 <= min_turns <= max_turns")
        if not (0.0 <= self.batch_probability <= 1.0):
            raise ValueError("batch_probability must lie in [0, 1]")

    @classmethod
    def from_dict(cls, data: dict | None) -> "WindowConfig":
        data = data or {}
        return cls(
            min_turns=int(data.get("min_turns", 1)),
            max_turns=int(data.get("max_turns", 5)),
            max_segments_per_conversation=int(data.get("max_segments_per_conversation", 2)),
            batch_probability=float(data.get("batch_probability", 0.5)),
        )


def read_corpus(path: str | Path) -> list[Conversation]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                turns = tuple(
                    Turn(t.get("speaker", ""), t["text"], t.get("labels"))
                    for t in record["turns"]
                )
                out.append(Conversation(record["id"], turns, record.get("labels")))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed conversation record: {exc}") from exc
    return out


def or_labels(turns: tuple[Turn, ...] | list[Turn], intent_ids: list[str]) -> dict[str, int]:
    """Conversation/segment label: logical OR of the turn labels."""
    out = {i: 0 for i in intent_ids}
    for turn in turns:
        if turn.labels is None:
            raise ValueError("turn without labels; cannot aggregate")
        for intent in intent_ids:
            if turn.labels.get(intent, 0):
                out[intent] = 1
    return out


def conversation_labels(conv: Conversation, intent_ids: list[str]) -> dict[str, int]:
    if all(t.labels is not None for t in conv.turns):
        return or_labels(conv.turns, intent_ids)
    if conv.labels is not None:
        return {i: int(conv.labels[i]) for i in intent_ids}
    raise ValueError(f"conversation {conv.id!r} has no usable labels")


def render_input(conv: Conversation, start: int = 0, end: int | None = None,
                 separator: str = DEFAULT_SEPARATOR) -> str:
    """Speaker-free model input: turn texts joined by the separator token."""
    end = len(conv.turns) if end is None else end
    return f" {separator} ".join(t.text for t in conv.turns[start:end])


def sample_windows(conv: Conversation, cfg: WindowConfig, rng: Pcg32) -> list[tuple[int, int]]:
    """Up to x random (start, end) windows; same draw sequence as the toolkit.

    Window length is uniform over [min_turns, min(max_turns, n)], start
    uniform over feasible positions, duplicates dropped.
    """
    n = len(conv.turns)
    if n < cfg.min_turns:
        return []
    hi = min(cfg.max_turns, n)
    seen: set[tuple[int, int]] = set()
    windows: list[tuple[int, int]] = []
    for _ in range(cfg.max_segments_per_conversation):
        length = rng.randint(cfg.min_turns, hi)
        start = rng.randint(0, n - length)
        if (start, length) in seen:
            continue
        seen.add((start, length))
        windows.append((start, start + length))
    return windows


def plan_batch_augmentation(batch: list[Conversation], cfg: WindowConfig,
                            rng: Pcg32) -> list[tuple[Conversation, int, int]]:
    """One probability draw per batch; windows supplement the batch."""
    if rng.uniform() >= cfg.batch_probability:
        return []
    out = []
    for conv in batch:
        for start, end in sample_windows(conv, cfg, rng):
            out.append((conv, start, end))
    return out
