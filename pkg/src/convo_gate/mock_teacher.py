"""Deterministic teacher double for tests and desk-scale distillation.

The mock answers the real prompt templates, so the full prompt-assembly
and response-parsing path is exercised.  Its labeling rule is fixed (and
is therefore usable as an independent oracle in end-to-end tests):

* a turn is action-positive iff its lowercased text contains any of
  ``remind``, ``schedule``, ``"please "``, ``can you``, ``task``,
  ``promise``, ``"i will "``, ``todo``;
* a turn is info-positive iff it contains ``?`` or any of ``what``,
  ``why``, ``how``, ``"who "``, ``"when "``, ``"where "``, ``tell me``.

Matching is plain substring containment on the lowercased text.  Only the
default two-intent schema ids are known to the rule.
"""

from __future__ import annotations

import re

from .errors import TeacherError
from .hashing import fnv1a64

ACTION_CUES = ("remind", "schedule", "please ", "can you", "task", "promise", "i will ", "todo")
INFO_CUES = ("?", "what", "why", "how", "who ", "when ", "where ", "tell me")

_RULES = {
    "action-triggering": ACTION_CUES,
    "information-seeking": INFO_CUES,
}


def mock_label(text: str, intent_id: str) -> tuple[int, str]:
    """Apply the fixed keyword rule; returns (label, explanation).

    Whitespace runs are collapsed before matching so the rule agrees with
    the labeling-prompt rendering, which puts each turn on a single line.
    """
    cues = _RULES.get(intent_id)
    if cues is None:
        raise TeacherError(f"mock teacher has no rule for intent {intent_id!r}")
    lowered = " ".join(text.lower().split())
    for cue in cues:
        if cue in lowered:
            return 1, f"contains the cue {cue.strip()!r}"
    return 0, "no matching cue in the turn"


_INTENT_RE = re.compile(r"^Intent:\s*(\S+)\s*$", re.MULTILINE)
_NUMBERED_TURN_RE = re.compile(r"^(\d+): (.*)$")
_SEED_RE = re.compile(r"^Seed query:\s*(.*?)\s*$", re.MULTILINE)
_N_PERSONAS_RE = re.compile(r"^Invent (\d+) distinct personas", re.MULTILINE)
_TOPIC_RE = re.compile(r"^Topic hint:\s*(.*?)\s*$", re.MULTILINE)
_PERSONA_NAME_RE = re.compile(r"^persona:\s*([^|]+?)\s*\|", re.MULTILINE)
_STARTER_RE = re.compile(r"^starter:\s*(.*?)\s*$", re.MULTILINE)

_OPENERS = (
    "morning folks.",
    "quick thing while everyone is here.",
    "oh, before i forget.",
    "hey team, one more item.",
)
_ACKS = (
    "sure, go ahead.",
    "yep, listening.",
    "of course.",
    "go for it.",
)
_CLOSERS = (
    "got it, noted.",
    "done, added to the list.",
    "okay, will do that now.",
    "sounds good, consider it handled.",
)
_SPEAKER_PAIRS = (("Ana", "Ben"), ("Mia", "Sam"), ("Lee", "Kim"), ("Joy", "Max"))

_PERSONA_NAMES = ("Alex", "Blake", "Casey", "Devon", "Emery", "Finley", "Gale", "Harper")
_PERSONA_QUALITIES = ("curious, warm", "dry, observant", "upbeat, chatty", "calm, precise")
_PERSONA_STYLES = ("short and direct", "rambling with asides", "playful", "measured")

_CHITCHAT_LINES = (
    "yeah, same here.",
    "honestly it went by so fast.",
    "we should grab lunch again soon.",
    "the weather finally turned nice.",
    "i finished that series last night.",
    "my garden has gotten away from me lately.",
    "traffic was brutal this morning.",
    "that little cafe downtown closed, sadly.",
    "same, it never slows down.",
    "we keep saying that every time.",
    "true, the days blur together.",
    "i finally fixed my bike over the break.",
)


class MockTeacher:
    """Deterministic stand-in for the provider; no network, no state."""

    concurrency = 1

    def complete(self, prompt: str, temperature: float = 0.0) -> str:
        if "<conversation>" in prompt:
            return self._label(prompt)
        if _SEED_RE.search(prompt):
            return self._seeded_conversation(prompt)
        if _N_PERSONAS_RE.search(prompt):
            return self._persona_setup(prompt)
        if "The conversation starts with:" in prompt:
            return self._persona_chat(prompt)
        raise TeacherError("mock teacher does not recognize this prompt")

    def _label(self, prompt: str) -> str:
        m = _INTENT_RE.search(prompt)
        if not m:
            raise TeacherError("labeling prompt lacks an 'Intent:' line")
        intent_id = m.group(1)
        block = prompt.split("<conversation>", 1)[1].split("</conversation>", 1)[0]
        lines = []
        for line in block.splitlines():
            turn = _NUMBERED_TURN_RE.match(line)
            if turn:
                label, explanation = mock_label(turn.group(2), intent_id)
                lines.append(f"turn {turn.group(1)}: {label} | {explanation}")
        return "\n".join(lines)

    def _seeded_conversation(self, prompt: str) -> str:
        seed = _SEED_RE.search(prompt).group(1)
        h = fnv1a64(seed.encode("utf-8"))
        a, b = _SPEAKER_PAIRS[h % len(_SPEAKER_PAIRS)]
        opener = _OPENERS[(h >> 8) % len(_OPENERS)]
        ack = _ACKS[(h >> 16) % len(_ACKS)]
        closer = _CLOSERS[(h >> 24) % len(_CLOSERS)]
        return "\n".join([f"{a}: {opener}", f"{b}: {ack}", f"{a}: {seed}", f"{b}: {closer}"])

    def _persona_setup(self, prompt: str) -> str:
        n = int(_N_PERSONAS_RE.search(prompt).group(1))
        topic_match = _TOPIC_RE.search(prompt)
        topic = topic_match.group(1) if topic_match else ""
        lines = []
        for i in range(n):
            name = _PERSONA_NAMES[i % len(_PERSONA_NAMES)] if i < len(_PERSONA_NAMES) else f"Speaker{i + 1}"
            lines.append(
                f"persona: {name} | qualities: {_PERSONA_QUALITIES[i % len(_PERSONA_QUALITIES)]}"
                f" | style: {_PERSONA_STYLES[i % len(_PERSONA_STYLES)]}"
            )
        starter = f"i keep coming back to {topic}." if topic else "long week, glad we could all catch up."
        lines.append(f"starter: {starter}")
        return "\n".join(lines)

    def _persona_chat(self, prompt: str) -> str:
        names = _PERSONA_NAME_RE.findall(prompt)
        starter = _STARTER_RE.search(prompt)
        if not names or not starter:
            raise TeacherError("persona chat prompt lacks personas or a starter")
        starter_text = starter.group(1)
        offset = fnv1a64(starter_text.encode("utf-8")) % len(_CHITCHAT_LINES)
        turns = [f"{names[0]}: {starter_text}"]
        for k in range(1, 3 * len(names)):
            speaker = names[k % len(names)]
            line = _CHITCHAT_LINES[(offset + 5 * k) % len(_CHITCHAT_LINES)]
            turns.append(f"{speaker}: {line}")
        return "\n".join(turns)
