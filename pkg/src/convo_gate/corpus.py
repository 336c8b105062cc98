"""Corpus files, dataset manifests, stats, and the balanced test sample.

The on-disk corpus is line-delimited: one UTF-8 JSON object per line,

    {"id": str, "source_dataset": str,
     "turns": [{"speaker": str, "text": str, "labels": {intent_id: 0|1}?}],
     "labels": {intent_id: 0|1}?}

Label mappings are keyed by intent id and, when present, must cover the
active schema exactly.  Line-delimited records keep readers streaming-
friendly on large corpora.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Literal, Sequence

import yaml

from .core import Conversation, IntentSchema, IntentVector, Turn, conversation_label, default_schema
from .errors import ConvoGateError, CorpusFormatError, UnlabeledError
from .rng import Pcg32

logger = logging.getLogger(__name__)

TokenCounter = Callable[[str], int]

MalformedPolicy = Literal["abort", "skip"]


def conversation_to_dict(conv: Conversation, schema: IntentSchema) -> dict:
    turns = []
    for t in conv.turns:
        item: dict = {"speaker": t.speaker, "text": t.text}
        if t.labels is not None:
            item["labels"] = {k: int(v) for k, v in t.labels.to_mapping(schema).items()}
        turns.append(item)
    record: dict = {"id": conv.id, "source_dataset": conv.source_dataset, "turns": turns}
    if conv.labels is not None:
        record["labels"] = {k: int(v) for k, v in conv.labels.to_mapping(schema).items()}
    if conv.notes is not None:
        record["notes"] = conv.notes
    return record


def conversation_from_dict(record: dict, schema: IntentSchema) -> Conversation:
    def vector(mapping: dict | None) -> IntentVector | None:
        if mapping is None:
            return None
        if not isinstance(mapping, dict):
            raise ValueError(f"labels must be an object, got {type(mapping).__name__}")
        return schema.vector_from_mapping(mapping, kind="binary")

    turns = tuple(
        Turn(speaker=t.get("speaker", ""), text=t["text"], labels=vector(t.get("labels")))
        for t in record["turns"]
    )
    return Conversation(
        id=record["id"],
        source_dataset=record.get("source_dataset", ""),
        turns=turns,
        labels=vector(record.get("labels")),
        notes=record.get("notes"),
    )


def read_corpus(path: str | Path, schema: IntentSchema | None = None,
                on_malformed: MalformedPolicy = "abort") -> Iterator[Conversation]:
    """Yield conversations from a line-format file, in file order.

    ``on_malformed`` chooses between aborting on the first bad line and
    skipping it with a logged warning; both report the line number.
    """
    schema = schema or default_schema()
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                conv = conversation_from_dict(record, schema)
            except (ValueError, KeyError, TypeError, ConvoGateError) as exc:
                err = CorpusFormatError(str(exc), path=str(path), line_no=line_no)
                if on_malformed == "abort":
                    raise err from exc
                logger.warning("skipping malformed record: %s", err)
                continue
            yield conv


def write_corpus(convs: Iterable[Conversation], path: str | Path,
                 schema: IntentSchema | None = None) -> int:
    """Write conversations to a line-format file; returns the record count.

    On an I/O failure the raised error carries ``records_written`` so
    partial output can be accounted for.
    """
    schema = schema or default_schema()
    written = 0
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for conv in convs:
                fh.write(json.dumps(conversation_to_dict(conv, schema), ensure_ascii=False))
                fh.write("\n")
                written += 1
    except OSError as exc:
        exc.records_written = written  # type: ignore[attr-defined]
        raise
    return written


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    path: str
    role: Literal["train", "validation", "test"]
    notes: str = ""


@dataclass(frozen=True)
class CorpusManifest:
    """Named datasets with roles, mirroring per-dataset corpus breakdowns."""

    datasets: tuple[ManifestEntry, ...]

    def by_role(self, role: str) -> tuple[ManifestEntry, ...]:
        return tuple(d for d in self.datasets if d.role == role)

    def entry(self, name: str) -> ManifestEntry:
        for d in self.datasets:
            if d.name == name:
                return d
        raise KeyError(f"no dataset named {name!r} in manifest")


def load_manifest(path: str | Path, require_paths: bool = True) -> CorpusManifest:
    """Load a manifest file (YAML list under a ``datasets`` key).

    Dataset paths are resolved relative to the manifest location and must
    exist unless ``require_paths`` is False.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    entries = []
    names = set()
    for item in data.get("datasets", ()):
        name = item["name"]
        if name in names:
            raise ValueError(f"duplicate dataset name {name!r} in {path}")
        names.add(name)
        ds_path = Path(item["path"])
        if not ds_path.is_absolute():
            ds_path = path.parent / ds_path
        role = item.get("role", "test")
        if role not in ("train", "validation", "test"):
            raise ValueError(f"dataset {name!r}: bad role {role!r}")
        if require_paths and not ds_path.exists():
            raise FileNotFoundError(f"dataset {name!r}: path does not exist: {ds_path}")
        entries.append(ManifestEntry(name=name, path=str(ds_path), role=role, notes=item.get("notes", "")))
    return CorpusManifest(datasets=tuple(entries))


@dataclass(frozen=True)
class DatasetStats:
    total: int
    per_intent_positive: dict[str, int]
    per_intent_negative: dict[str, int]
    total_tokens: int


def compute_stats(convs: Iterable[Conversation], schema: IntentSchema,
                  counter: TokenCounter) -> DatasetStats:
    """Per-intent positive/negative counts plus token totals.

    Conversations must carry (or derive from turns) conversation-level
    labels; an unlabeled one aborts with its id.
    """
    pos = {i: 0 for i in schema.ids}
    neg = {i: 0 for i in schema.ids}
    total = 0
    tokens = 0
    for conv in convs:
        try:
            label = conversation_label(conv)
        except UnlabeledError:
            raise UnlabeledError(f"conversation {conv.id!r} is unlabeled; cannot compute stats") from None
        mapping = label.to_mapping(schema)
        for intent, v in mapping.items():
            if v:
                pos[intent] += 1
            else:
                neg[intent] += 1
        total += 1
        tokens += sum(counter(t.text) for t in conv.turns)
    return DatasetStats(total=total, per_intent_positive=pos, per_intent_negative=neg, total_tokens=tokens)


def sample_balanced(convs: Sequence[Conversation], target_size: int, seed: int,
                    schema: IntentSchema | None = None) -> list[Conversation]:
    """Greedy balanced subsample toward a 50% positive rate per intent.

    Candidates are visited in a seed-shuffled order; each pick takes the
    first candidate that minimizes the maximum per-intent deviation from a
    50% positive rate of the selection so far, with the mean deviation as
    the tie-break (an intent with no attainable balance would otherwise
    pin the maximum and mask the others).  Deterministic per seed.
    """
    schema = schema or default_schema()
    if target_size > len(convs):
        raise ValueError(f"target_size {target_size} exceeds corpus size {len(convs)}")
    labels = [conversation_label(c).to_mapping(schema) for c in convs]
    order = list(range(len(convs)))
    Pcg32(seed).shuffle(order)
    remaining = order
    pos_counts = {i: 0 for i in schema.ids}
    chosen: list[int] = []
    while len(chosen) < target_size:
        n_after = len(chosen) + 1
        best_idx = None
        best_key = None
        for pos_in_remaining, cand in enumerate(remaining):
            devs = [
                abs((pos_counts[i] + labels[cand][i]) / n_after - 0.5)
                for i in schema.ids
            ]
            key = (max(devs), sum(devs))
            if best_key is None or key < best_key:
                best_key = key
                best_idx = pos_in_remaining
                if key == (0.0, 0.0):
                    break
        assert best_idx is not None
        pick = remaining.pop(best_idx)
        for i in schema.ids:
            pos_counts[i] += labels[pick][i]
        chosen.append(pick)
    return [convs[i] for i in chosen]
