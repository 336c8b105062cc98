"""LLM-teacher clients for turn annotation and synthetic conversation generation.

A teacher is anything with a ``complete(prompt, temperature)`` method.
:class:`HttpTeacher` talks to a chat-completion style provider endpoint;
:class:`MockTeacher` answers the same prompts deterministically from fixed
keyword rules and templates, which makes it both the test double and the
desk-scale distillation oracle.

Labeling runs one request per intent per conversation; the per-intent
responses are merged into full per-turn label vectors.  Responses must
enumerate every turn index explicitly so no label can be lost silently.
"""

from __future__ import annotations

import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Iterator, Protocol, Sequence

import httpx

from .core import Conversation, IntentDescriptor, IntentSchema, IntentVector, Turn, with_labels
from .errors import (
    AnnotationCoverageError,
    TeacherResponseError,
    TeacherTransportError,
)

API_KEY_ENV = "CONVO_GATE_TEACHER_KEY"

LABELING_TEMPERATURE = 0.0
GENERATION_TEMPERATURE = 0.9


@dataclass(frozen=True)
class TeacherConfig:
    """Connection settings for a provider endpoint.

    ``temperature`` overrides the per-operation defaults (0 for labeling,
    0.9 for generation) when set.  The API key is read from the
    environment, never stored in files.
    """

    endpoint: str
    model: str
    api_key_env: str = API_KEY_ENV
    max_retries: int = 3
    timeout: float = 30.0
    temperature: float | None = None
    concurrency: int = 4

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


class Teacher(Protocol):
    def complete(self, prompt: str, temperature: float) -> str: ...


class HttpTeacher:
    """Chat-completion client with bounded retries and backoff."""

    def __init__(self, config: TeacherConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        api_key = os.environ.get(config.api_key_env, "")
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=config.timeout, headers=headers, transport=transport)
        self.concurrency = config.concurrency

    def complete(self, prompt: str, temperature: float) -> str:
        if self.config.temperature is not None:
            temperature = self.config.temperature
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        }
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(min(0.5 * 2 ** (attempt - 1), 8.0))
            try:
                response = self._client.post(self.config.endpoint, json=payload)
                if response.status_code >= 500:
                    last_error = TeacherTransportError(f"provider returned {response.status_code}")
                    continue
                response.raise_for_status()
                body = response.json()
                return body["choices"][0]["message"]["content"]
            except (httpx.HTTPError, OSError) as exc:
                last_error = exc
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise TeacherResponseError(
                    f"malformed provider response: {exc}", raw=response.text
                ) from exc
        raise TeacherTransportError(
            f"teacher request failed after {self.config.max_retries + 1} attempts: {last_error}"
        )

    def close(self):
        self._client.close()


def _load_template(name: str) -> str:
    return resources.files("convo_gate.prompts").joinpath(name).read_text(encoding="utf-8")


def _render_examples(intent: IntentDescriptor) -> tuple[str, str]:
    explanations = list(intent.example_explanations)
    explanations += [""] * (len(intent.positive_examples) + len(intent.negative_examples) - len(explanations))
    pos_lines, neg_lines = [], []
    for i, example in enumerate(intent.positive_examples):
        why = explanations[i]
        pos_lines.append(f'- "{example}"' + (f" (why: {why})" if why else ""))
    for j, example in enumerate(intent.negative_examples):
        why = explanations[len(intent.positive_examples) + j]
        neg_lines.append(f'- "{example}"' + (f" (why: {why})" if why else ""))
    return "\n".join(pos_lines) or "- (none given)", "\n".join(neg_lines) or "- (none given)"


def build_labeling_prompt(conv: Conversation, intent: IntentDescriptor) -> str:
    """Prompt asking the teacher to label every numbered turn for one intent.

    Turn texts are collapsed to single lines so the numbering stays
    parseable whatever whitespace the source contained.
    """
    positive, negative = _render_examples(intent)
    conversation = "\n".join(f"{i}: {' '.join(t.text.split())}" for i, t in enumerate(conv.turns))
    return _load_template("label_turns.txt").format(
        intent_id=intent.id,
        intent_definition=intent.definition,
        positive_examples=positive,
        negative_examples=negative,
        conversation=conversation,
        n_turns=len(conv.turns),
    )


_TURN_LINE_RE = re.compile(r"^\s*turn\s+(\d+)\s*:\s*(\S+)\s*(?:\|\s*(.*?))?\s*$", re.IGNORECASE)


def parse_teacher_response(raw: str, expected_turns: int) -> list[tuple[int, int, str]]:
    """Extract (turn_index, label, explanation) rows from a labeling response.

    Leading and trailing prose is tolerated; coverage and the 0/1 label
    domain are not negotiable.  Rows come back sorted by turn index.
    """
    rows: dict[int, tuple[int, str]] = {}
    matched_any = False
    for line in raw.splitlines():
        m = _TURN_LINE_RE.match(line)
        if not m:
            continue
        matched_any = True
        index = int(m.group(1))
        label_token = m.group(2)
        if label_token not in ("0", "1"):
            raise TeacherResponseError(f"label {label_token!r} for turn {index} is not 0/1", raw=raw)
        if index in rows:
            raise AnnotationCoverageError(f"turn {index} labeled more than once", raw=raw)
        rows[index] = (int(label_token), (m.group(3) or "").strip())
    if not matched_any:
        raise TeacherResponseError("no 'turn <i>: <label> | <explanation>' block found", raw=raw)
    expected = set(range(expected_turns))
    if set(rows) != expected:
        missing = sorted(expected - set(rows))
        extra = sorted(set(rows) - expected)
        raise AnnotationCoverageError(
            f"response covered {len(rows)} of {expected_turns} turns (missing={missing}, unexpected={extra})",
            raw=raw,
        )
    return [(i, rows[i][0], rows[i][1]) for i in range(expected_turns)]


@dataclass(frozen=True)
class TurnAnnotation:
    """Labels for one turn across all intents, with the teacher's reasons."""

    turn_index: int
    labels: IntentVector
    explanations: dict[str, str]


def label_turns(conv: Conversation, schema: IntentSchema, teacher: Teacher) -> list[TurnAnnotation]:
    """Run one labeling request per intent and merge into per-turn vectors.

    Every positive label must come with a non-empty explanation; a teacher
    that cannot justify a positive is treated as an unusable response.
    """
    intents = schema.intents

    def run_intent(intent: IntentDescriptor) -> list[tuple[int, int, str]]:
        raw = teacher.complete(build_labeling_prompt(conv, intent), temperature=LABELING_TEMPERATURE)
        return parse_teacher_response(raw, expected_turns=len(conv.turns))

    workers = min(len(intents), getattr(teacher, "concurrency", 4)) or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_intent = list(pool.map(run_intent, intents))
    else:
        per_intent = [run_intent(i) for i in intents]

    annotations = []
    for turn_index in range(len(conv.turns)):
        values = []
        explanations = {}
        for intent, rows in zip(intents, per_intent):
            _, label, explanation = rows[turn_index]
            if label == 1 and not explanation:
                raise TeacherResponseError(
                    f"positive label for turn {turn_index} intent {intent.id!r} lacks an explanation"
                )
            values.append(label)
            explanations[intent.id] = explanation
        annotations.append(
            TurnAnnotation(turn_index=turn_index, labels=IntentVector(tuple(values)), explanations=explanations)
        )
    return annotations


def label_conversation(conv: Conversation, schema: IntentSchema, teacher: Teacher) -> Conversation:
    """Copy of ``conv`` with teacher labels on every turn and the OR label on top."""
    annotations = label_turns(conv, schema, teacher)
    return with_labels(conv, [a.labels for a in annotations])


def label_corpus(convs: Iterable[Conversation], schema: IntentSchema, teacher: Teacher,
                 concurrency: int | None = None) -> Iterator[Conversation]:
    """Label a stream of conversations with bounded concurrent requests."""
    workers = concurrency or getattr(teacher, "concurrency", 4)
    if workers <= 1:
        for conv in convs:
            yield label_conversation(conv, schema, teacher)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(lambda c: label_conversation(c, schema, teacher), convs)


_CHAT_LINE_RE = re.compile(r"^\s*([^:]{1,64}?)\s*:\s*(.+?)\s*$")


def parse_conversation_lines(raw: str) -> list[tuple[str, str]]:
    """Parse 'speaker: utterance' lines out of a generation response."""
    turns = []
    for line in raw.splitlines():
        m = _CHAT_LINE_RE.match(line)
        if m:
            turns.append((m.group(1), m.group(2)))
    if not turns:
        raise TeacherResponseError("no 'speaker: utterance' lines in generation response", raw=raw)
    return turns


def generate_from_seeds(seed_queries: Sequence[str], target_intent: str, teacher: Teacher,
                        source_dataset: str = "synthetic-seeded") -> Iterator[Conversation]:
    """One generated conversation per seed query, unlabeled.

    Labeling is a separate pass; generated turns never carry labels.
    """
    template = _load_template("generate_seeded.txt")
    for i, seed in enumerate(seed_queries):
        prompt = template.format(target_intent=target_intent, seed_query=seed)
        raw = teacher.complete(prompt, temperature=GENERATION_TEMPERATURE)
        turns = tuple(Turn(speaker=s, text=t) for s, t in parse_conversation_lines(raw))
        yield Conversation(
            id=f"{source_dataset}-{i:05d}",
            source_dataset=source_dataset,
            turns=turns,
            notes={"seed_query": seed, "target_intent": target_intent},
        )


_PERSONA_LINE_RE = re.compile(
    r"^\s*persona\s*:\s*(?P<name>[^|]+?)\s*\|\s*qualities\s*:\s*(?P<qualities>[^|]*?)\s*\|\s*style\s*:\s*(?P<style>.*?)\s*$",
    re.IGNORECASE,
)
_STARTER_LINE_RE = re.compile(r"^\s*starter\s*:\s*(.+?)\s*$", re.IGNORECASE)


def generate_persona_conversation(n_speakers: int, topic_hint: str | None, teacher: Teacher,
                                  conv_id: str = "synthetic-persona-00000",
                                  source_dataset: str = "synthetic-persona") -> Conversation:
    """Two-phase persona synthesis: invent personas, then let them talk.

    Phase 1 produces ``n_speakers`` personas (name, qualities, speech
    style) plus a conversation starter; phase 2 generates the group chat
    that begins with the starter.  Persona metadata lands in the
    conversation notes.
    """
    if n_speakers < 2:
        raise ValueError("persona conversations need at least 2 speakers")
    setup_prompt = _load_template("persona_setup.txt").format(
        n_speakers=n_speakers, topic_hint=topic_hint or ""
    )
    setup_raw = teacher.complete(setup_prompt, temperature=GENERATION_TEMPERATURE)

    personas = []
    starter = None
    for line in setup_raw.splitlines():
        m = _PERSONA_LINE_RE.match(line)
        if m:
            personas.append({"name": m["name"], "qualities": m["qualities"], "style": m["style"]})
            continue
        m = _STARTER_LINE_RE.match(line)
        if m:
            starter = m.group(1)
    if len(personas) != n_speakers or starter is None:
        raise TeacherResponseError(
            f"persona setup returned {len(personas)} personas and "
            f"{'a' if starter else 'no'} starter for n={n_speakers}", raw=setup_raw,
        )

    persona_block = "\n".join(
        f"persona: {p['name']} | qualities: {p['qualities']} | style: {p['style']}" for p in personas
    )
    chat_prompt = _load_template("persona_chat.txt").format(
        personas=persona_block, starter=starter, n_turns=3 * n_speakers
    )
    chat_raw = teacher.complete(chat_prompt, temperature=GENERATION_TEMPERATURE)
    turns = tuple(Turn(speaker=s, text=t) for s, t in parse_conversation_lines(chat_raw))
    return Conversation(
        id=conv_id,
        source_dataset=source_dataset,
        turns=turns,
        notes={"personas": personas, "starter": starter, "topic_hint": topic_hint or ""},
    )
