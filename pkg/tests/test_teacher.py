import json

import httpx
import pytest

from convo_gate.core import Conversation, Turn, default_schema
from convo_gate.errors import (
    AnnotationCoverageError,
    TeacherResponseError,
    TeacherTransportError,
)
from convo_gate.mock_teacher import ACTION_CUES, INFO_CUES, MockTeacher, mock_label
from convo_gate.teacher import (
    HttpTeacher,
    TeacherConfig,
    build_labeling_prompt,
    generate_from_seeds,
    generate_persona_conversation,
    label_conversation,
    label_corpus,
    label_turns,
    parse_teacher_response,
)

SCHEMA = default_schema()


def conv_of(*texts):
    return Conversation(
        id="t1", source_dataset="d",
        turns=tuple(Turn(speaker=f"s{i}", text=t) for i, t in enumerate(texts)),
    )


class TestMockRule:
    @pytest.mark.parametrize("text,expected", [
        ("please remind me to call mom", 1),
        ("i will send it tonight", 1),
        ("we schedule around noon", 1),
        ("nothing to see here", 0),
        ("ok", 0),
    ])
    def test_action_rule(self, text, expected):
        assert mock_label(text, "action-triggering")[0] == expected

    @pytest.mark.parametrize("text,expected", [
        ("what is the capital of France", 1),
        ("is it raining?", 1),
        ("tell me about the launch", 1),
        ("the launch went fine", 0),
    ])
    def test_info_rule(self, text, expected):
        assert mock_label(text, "information-seeking")[0] == expected

    def test_positive_labels_have_explanations(self):
        label, explanation = mock_label("please remind me", "action-triggering")
        assert label == 1 and explanation

    def test_unknown_intent_rejected(self):
        with pytest.raises(Exception, match="no rule"):
            mock_label("x", "sentiment")


class TestLabeling:
    def test_mock_labels_action_example(self):
        conv = conv_of("please remind me to call mom", "ok")
        annotations = label_turns(conv, SCHEMA, MockTeacher())
        assert [a.labels.values[0] for a in annotations] == [1, 0]

    def test_mock_labels_info_example(self):
        conv = conv_of("what is the capital of France?")
        annotations = label_turns(conv, SCHEMA, MockTeacher())
        assert annotations[0].labels.values == (0, 1)

    def test_idempotent(self):
        conv = conv_of("can you schedule the sync?", "sure thing", "why though")
        first = label_turns(conv, SCHEMA, MockTeacher())
        second = label_turns(conv, SCHEMA, MockTeacher())
        assert first == second

    def test_positives_carry_explanations(self):
        conv = conv_of("please remind me", "what happened", "nothing")
        for a in label_turns(conv, SCHEMA, MockTeacher()):
            for intent_id, value in zip(SCHEMA.ids, a.labels.values):
                if value:
                    assert a.explanations[intent_id]

    def test_label_conversation_attaches_or(self):
        conv = conv_of("please remind me", "ok")
        labeled = label_conversation(conv, SCHEMA, MockTeacher())
        assert labeled.labels.values == (1, 0)
        assert labeled.turns[0].labels.values == (1, 0)

    def test_label_corpus_order_preserved(self):
        convs = [conv_of(f"turn {i}") for i in range(5)]
        for i, c in enumerate(convs):
            object.__setattr__(c, "id", f"c{i}")
        labeled = list(label_corpus(convs, SCHEMA, MockTeacher(), concurrency=4))
        assert [c.id for c in labeled] == [f"c{i}" for i in range(5)]

    def test_prompt_includes_definition_examples_and_turns(self):
        conv = conv_of("hello there", "set a reminder")
        intent = SCHEMA.intents[0]
        prompt = build_labeling_prompt(conv, intent)
        assert intent.definition in prompt
        assert intent.positive_examples[0] in prompt
        assert intent.negative_examples[0] in prompt
        assert "0: hello there" in prompt
        assert "1: set a reminder" in prompt


class TestParseResponse:
    def test_well_formed_block(self):
        raw = "turn 0: 1 | asks for a reminder\nturn 1: 0 | just an ack"
        rows = parse_teacher_response(raw, 2)
        assert rows == [(0, 1, "asks for a reminder"), (1, 0, "just an ack")]

    def test_tolerates_surrounding_prose(self):
        raw = "Sure! Here are the labels:\nturn 0: 1 | reason\nHope that helps."
        assert parse_teacher_response(raw, 1) == [(0, 1, "reason")]

    def test_label_out_of_domain(self):
        with pytest.raises(TeacherResponseError, match="not 0/1"):
            parse_teacher_response("turn 0: 2 | maybe", 1)

    def test_duplicate_turn_index(self):
        raw = "turn 0: 1 | a\nturn 0: 0 | b"
        with pytest.raises(AnnotationCoverageError, match="more than once"):
            parse_teacher_response(raw, 1)

    def test_partial_coverage(self):
        raw = "turn 0: 1 | a\nturn 1: 0 | b"
        with pytest.raises(AnnotationCoverageError, match="2 of 3"):
            parse_teacher_response(raw, 3)

    def test_missing_block(self):
        with pytest.raises(TeacherResponseError, match="no 'turn"):
            parse_teacher_response("I cannot help with that.", 2)

    def test_out_of_range_index(self):
        raw = "turn 0: 1 | a\nturn 5: 0 | b"
        with pytest.raises(AnnotationCoverageError):
            parse_teacher_response(raw, 2)


class TestGeneration:
    def test_seeded_conversation_embeds_seed(self):
        seed = "set an alarm for 7am"
        convs = list(generate_from_seeds([seed], "action-triggering", MockTeacher()))
        assert len(convs) == 1
        conv = convs[0]
        assert len(conv.turns) == 4
        assert any(seed in t.text for t in conv.turns)
        assert all(t.labels is None for t in conv.turns)

    def test_empty_seed_list(self):
        assert list(generate_from_seeds([], "action-triggering", MockTeacher())) == []

    def test_distinct_ids(self):
        convs = list(generate_from_seeds(["a b c", "d e f", "g h i"], "action-triggering", MockTeacher()))
        ids = [c.id for c in convs]
        assert len(set(ids)) == 3

    def test_persona_conversation_shape(self):
        conv = generate_persona_conversation(3, None, MockTeacher())
        speakers = {t.speaker for t in conv.turns}
        assert len(speakers) == 3
        assert len(conv.turns) >= 6
        assert conv.notes and len(conv.notes["personas"]) == 3

    def test_persona_requires_two_speakers(self):
        with pytest.raises(ValueError, match="at least 2"):
            generate_persona_conversation(1, None, MockTeacher())

    def test_topic_hint_reaches_phase_one_prompt(self):
        captured = []

        class SpyTeacher(MockTeacher):
            def complete(self, prompt, temperature=0.0):
                captured.append(prompt)
                return super().complete(prompt, temperature)

        generate_persona_conversation(2, "weekend plans", SpyTeacher())
        assert "weekend plans" in captured[0]

    def test_persona_determinism(self):
        a = generate_persona_conversation(3, "the garden", MockTeacher())
        b = generate_persona_conversation(3, "the garden", MockTeacher())
        assert a == b


class TestHttpTeacher:
    def make_teacher(self, handler, **config_overrides):
        config = TeacherConfig(endpoint="https://teacher.test/v1/chat", model="teacher-large",
                               max_retries=2, timeout=5.0, **config_overrides)
        return HttpTeacher(config, transport=httpx.MockTransport(handler))

    def test_happy_path(self):
        def handler(request):
            body = json.loads(request.content)
            assert body["model"] == "teacher-large"
            assert body["messages"][0]["role"] == "user"
            return httpx.Response(200, json={"choices": [{"message": {"content": "turn 0: 1 | ok"}}]})

        teacher = self.make_teacher(handler)
        assert teacher.complete("label this", temperature=0.0) == "turn 0: 1 | ok"

    def test_retries_then_succeeds(self):
        calls = []

        def handler(request):
            calls.append(1)
            if len(calls) < 3:
                return httpx.Response(503)
            return httpx.Response(200, json={"choices": [{"message": {"content": "done"}}]})

        teacher = self.make_teacher(handler)
        assert teacher.complete("x", temperature=0.0) == "done"
        assert len(calls) == 3

    def test_transport_error_after_retries(self):
        def handler(request):
            return httpx.Response(500)

        teacher = self.make_teacher(handler)
        with pytest.raises(TeacherTransportError, match="3 attempts"):
            teacher.complete("x", temperature=0.0)

    def test_malformed_response_body(self):
        def handler(request):
            return httpx.Response(200, json={"unexpected": True})

        teacher = self.make_teacher(handler)
        with pytest.raises(TeacherResponseError, match="malformed"):
            teacher.complete("x", temperature=0.0)

    def test_api_key_from_environment(self, monkeypatch):
        monkeypatch.setenv("CONVO_GATE_TEACHER_KEY", "sk-test-123")
        seen = {}

        def handler(request):
            seen["auth"] = request.headers.get("authorization")
            return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

        teacher = self.make_teacher(handler)
        teacher.complete("x", temperature=0.0)
        assert seen["auth"] == "Bearer sk-test-123"

    def test_temperature_override(self):
        seen = {}

        def handler(request):
            seen["temperature"] = json.loads(request.content)["temperature"]
            return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

        teacher = self.make_teacher(handler, temperature=0.3)
        teacher.complete("x", temperature=0.9)
        assert seen["temperature"] == 0.3

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TeacherConfig(endpoint="e", model="m", max_retries=-1)
        with pytest.raises(ValueError):
            TeacherConfig(endpoint="e", model="m", timeout=0)


def test_rule_cue_lists_are_fixed():
    assert ACTION_CUES == ("remind", "schedule", "please ", "can you", "task", "promise", "i will ", "todo")
    assert INFO_CUES == ("?", "what", "why", "how", "who ", "when ", "where ", "tell me")
