"""Domain types for multi-party conversations and the intent label algebra.

A corpus record is a :class:`Conversation` of ordered speaker turns.  Labels
are binary per-intent indicators carried by an :class:`IntentVector` whose
positions follow the :class:`IntentSchema` order.  Segment and conversation
labels are the logical OR of the turn labels they cover: one positive turn
makes the whole unit positive for that intent.

All types are immutable after construction and the operations are pure
functions, so values can be shared freely between threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

from .errors import SchemaMismatchError, TurnRangeError, UnlabeledError

_INTENT_ID_RE = re.compile(r"^[a-z0-9]+(-[a-z0-9]+)*$")

DEFAULT_SEPARATOR = "[SEP]"


@dataclass(frozen=True)
class IntentDescriptor:
    """One intent: a short id plus the material shown to the teacher LLM.

    ``example_explanations`` line up pairwise with ``positive_examples``
    followed by ``negative_examples``; missing entries render without an
    explanation.
    """

    id: str
    definition: str
    positive_examples: tuple[str, ...] = ()
    negative_examples: tuple[str, ...] = ()
    example_explanations: tuple[str, ...] = ()

    def __post_init__(self):
        if not _INTENT_ID_RE.match(self.id):
            raise ValueError(f"intent id {self.id!r} is not lowercase-kebab")


@dataclass(frozen=True)
class IntentSchema:
    """Ordered set of intents; the order defines IntentVector positions."""

    intents: tuple[IntentDescriptor, ...]

    def __post_init__(self):
        if not self.intents:
            raise ValueError("schema needs at least one intent")
        ids = [i.id for i in self.intents]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate intent ids: {ids}")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(i.id for i in self.intents)

    def __len__(self) -> int:
        return len(self.intents)

    def index_of(self, intent_id: str) -> int:
        try:
            return self.ids.index(intent_id)
        except ValueError:
            raise SchemaMismatchError(f"unknown intent {intent_id!r}; schema has {self.ids}") from None

    def vector_from_mapping(self, mapping: Mapping[str, int], kind: Literal["binary", "score"] = "binary") -> "IntentVector":
        """Build a vector from an {intent_id: value} mapping (all ids required)."""
        missing = set(self.ids) - set(mapping)
        extra = set(mapping) - set(self.ids)
        if missing or extra:
            raise SchemaMismatchError(
                f"label mapping does not match schema {self.ids}: missing={sorted(missing)} extra={sorted(extra)}"
            )
        return IntentVector(tuple(mapping[i] for i in self.ids), kind=kind)


@dataclass(frozen=True)
class IntentVector:
    """Per-intent values aligned to a schema's intent order.

    ``kind`` is "binary" for 0/1 labels and "score" for reals in [0, 1].
    """

    values: tuple[float, ...]
    kind: Literal["binary", "score"] = "binary"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ValueError("empty intent vector")
        if self.kind == "binary":
            if any(v not in (0, 1) for v in self.values):
                raise ValueError(f"binary vector may only contain 0/1, got {self.values}")
        else:
            if any(not (0.0 <= v <= 1.0) for v in self.values):
                raise ValueError(f"scores must lie in [0, 1], got {self.values}")

    def __len__(self) -> int:
        return len(self.values)

    def to_mapping(self, schema: IntentSchema) -> dict[str, float]:
        if len(self.values) != len(schema):
            raise SchemaMismatchError(f"vector of length {len(self)} does not fit schema of {len(schema)} intents")
        return dict(zip(schema.ids, self.values))


@dataclass(frozen=True)
class Turn:
    """One speaker's utterance. The speaker may be unknown (empty string)."""

    speaker: str
    text: str
    labels: IntentVector | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("turn text is empty")


@dataclass(frozen=True)
class Conversation:
    """Ordered turns from one source conversation, with optional labels.

    If every turn carries labels and conversation labels are present, the
    conversation labels must equal the OR-aggregate of the turn labels;
    this is validated at construction.  ``notes`` carries free-form
    provenance such as generation personas.
    """

    id: str
    source_dataset: str
    turns: tuple[Turn, ...]
    labels: IntentVector | None = None
    notes: dict | None = field(default=None, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(self.turns))
        if not self.turns:
            raise ValueError(f"conversation {self.id!r} has no turns")
        turn_labels = [t.labels for t in self.turns]
        if self.labels is not None and all(l is not None for l in turn_labels):
            agg = aggregate_labels([l for l in turn_labels if l is not None])
            if agg.values != self.labels.values:
                raise ValueError(
                    f"conversation {self.id!r}: labels {self.labels.values} differ from "
                    f"turn-label OR {agg.values}"
                )

    @property
    def fully_turn_labeled(self) -> bool:
        return all(t.labels is not None for t in self.turns)


@dataclass(frozen=True)
class Segment:
    """A contiguous [start_turn, end_turn) view of one conversation.

    ``labels`` is the OR-aggregate over the covered turns when those carry
    labels (training); it is None for unlabeled serving traffic.  A segment
    that holds a single turn too large for the token budget is flagged
    ``over_budget`` so downstream can choose a truncation policy.
    """

    conversation_id: str
    start_turn: int
    end_turn: int
    labels: IntentVector | None = None
    over_budget: bool = False

    def __post_init__(self):
        if not (0 <= self.start_turn < self.end_turn):
            raise TurnRangeError(f"bad segment range [{self.start_turn}, {self.end_turn})")

    def __len__(self) -> int:
        return self.end_turn - self.start_turn


def aggregate_labels(turn_labels: Sequence[IntentVector]) -> IntentVector:
    """Per-intent logical OR across binary label vectors."""
    if not turn_labels:
        raise ValueError("no labels to aggregate")
    width = len(turn_labels[0])
    out = [0] * width
    for vec in turn_labels:
        if vec.kind != "binary":
            raise ValueError("aggregate_labels expects binary vectors")
        if len(vec) != width:
            raise SchemaMismatchError(f"mixed vector lengths {width} and {len(vec)}")
        for i, v in enumerate(vec.values):
            if v:
                out[i] = 1
    return IntentVector(tuple(out), kind="binary")


def check_range(conv: Conversation, start: int, end: int) -> None:
    if not (0 <= start < end <= len(conv.turns)):
        raise TurnRangeError(
            f"range [{start}, {end}) invalid for conversation {conv.id!r} with {len(conv.turns)} turns"
        )


def render_model_input(conv: Conversation, start: int = 0, end: int | None = None,
                       separator: str = DEFAULT_SEPARATOR) -> str:
    """Join turn texts in [start, end) with ``separator``, dropping speakers.

    The model never sees who spoke; only what was said, in order.
    """
    if end is None:
        end = len(conv.turns)
    check_range(conv, start, end)
    return f" {separator} ".join(t.text for t in conv.turns[start:end])


def segment_labels(conv: Conversation, seg: Segment) -> IntentVector:
    """OR-aggregate of turn labels over the segment's range."""
    check_range(conv, seg.start_turn, seg.end_turn)
    labels = []
    for i in range(seg.start_turn, seg.end_turn):
        l = conv.turns[i].labels
        if l is None:
            raise UnlabeledError(f"turn {i} of conversation {conv.id!r} has no labels")
        labels.append(l)
    return aggregate_labels(labels)


def conversation_label(conv: Conversation) -> IntentVector:
    """The conversation-level label: stored if present, else derived by OR."""
    if conv.labels is not None:
        return conv.labels
    if not conv.fully_turn_labeled:
        raise UnlabeledError(f"conversation {conv.id!r} has neither conversation nor full turn labels")
    return aggregate_labels([t.labels for t in conv.turns if t.labels is not None])


def with_labels(conv: Conversation, turn_labels: Sequence[IntentVector]) -> Conversation:
    """Copy of ``conv`` with per-turn labels and the derived OR label attached."""
    if len(turn_labels) != len(conv.turns):
        raise SchemaMismatchError(
            f"{len(turn_labels)} label vectors for {len(conv.turns)} turns in {conv.id!r}"
        )
    turns = tuple(
        Turn(t.speaker, t.text, labels=l) for t, l in zip(conv.turns, turn_labels)
    )
    return Conversation(
        id=conv.id,
        source_dataset=conv.source_dataset,
        turns=turns,
        labels=aggregate_labels(list(turn_labels)),
        notes=conv.notes,
    )


def default_schema() -> IntentSchema:
    """The built-in two-intent schema for assistant-style filtering."""
    return IntentSchema(
        intents=(
            IntentDescriptor(
                id="action-triggering",
                definition=(
                    "The turn asks for something to be done or commits to doing it: "
                    "creating reminders or alarms, scheduling meetings or events, "
                    "assigning or accepting tasks, and making promises count. "
                    "Merely describing past work or stating facts does not."
                ),
                positive_examples=(
                    "please remind me to send the report on friday",
                    "can you schedule a sync with the design team for tomorrow?",
                    "i will take care of booking the venue this week",
                ),
                negative_examples=(
                    "the report went out last friday",
                    "that venue was lovely last year",
                ),
                example_explanations=(
                    "directly requests a reminder to be created",
                    "asks another party to schedule a meeting",
                    "the speaker commits to completing a task",
                    "describes a completed event, nothing is requested or promised",
                    "an opinion about the past with no request or commitment",
                ),
            ),
            IntentDescriptor(
                id="information-seeking",
                definition=(
                    "The turn tries to find something out: it asks a question, "
                    "expresses uncertainty or curiosity about a topic, or requests "
                    "an explanation. Statements of known fact do not count."
                ),
                positive_examples=(
                    "what is the capital of france?",
                    "i have no idea how this library handles retries",
                    "tell me more about how the billing works",
                ),
                negative_examples=(
                    "paris is the capital of france",
                    "the billing runs on the first of the month",
                ),
                example_explanations=(
                    "a direct factual question",
                    "admits a knowledge gap about a topic",
                    "requests an explanation of a topic",
                    "states a fact without seeking anything",
                    "states a fact without seeking anything",
                ),
            ),
        )
    )


def schema_from_dict(data: Mapping) -> IntentSchema:
    """Build a schema from parsed configuration (see ``config.load_schema``)."""
    intents = []
    for item in data.get("intents", ()):
        intents.append(
            IntentDescriptor(
                id=item["id"],
                definition=item.get("definition", ""),
                positive_examples=tuple(item.get("positive_examples", ())),
                negative_examples=tuple(item.get("negative_examples", ())),
                example_explanations=tuple(item.get("example_explanations", ())),
            )
        )
    return IntentSchema(intents=tuple(intents))


def schema_to_dict(schema: IntentSchema) -> dict:
    return {
        "intents": [
            {
                "id": i.id,
                "definition": i.definition,
                "positive_examples": list(i.positive_examples),
                "negative_examples": list(i.negative_examples),
                "example_explanations": list(i.example_explanations),
            }
            for i in schema.intents
        ]
    }
