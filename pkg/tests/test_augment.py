import pytest

from convo_gate.augment import WindowConfig, plan_batch_augmentation, sample_windows, split_to_context_budget
from convo_gate.core import Conversation, IntentVector, Segment, Turn, aggregate_labels, render_model_input
from convo_gate.errors import UnlabeledError
from convo_gate.evaluation import whitespace_counter
from convo_gate.rng import Pcg32

from conftest import random_conversation


def vec(*values):
    return IntentVector(tuple(values), kind="binary")


def conv_with_turns(n, tokens_per_turn=3):
    text = " ".join(f"w{k}" for k in range(tokens_per_turn))
    turns = tuple(Turn(f"s{i}", text, labels=vec(i % 2, 0)) for i in range(n))
    return Conversation(id="c", source_dataset="d", turns=turns)


class TestSampleWindows:
    def test_draws_respect_bounds(self, schema):
        conv = random_conversation(Pcg32(0), schema, "c", min_turns=10, max_turns=10)
        cfg = WindowConfig(min_turns=1, max_turns=5, max_segments_per_conversation=2)
        segments = sample_windows(conv, cfg, Pcg32(42))
        assert 1 <= len(segments) <= 2
        for seg in segments:
            assert 1 <= len(seg) <= 5
            assert 0 <= seg.start_turn < seg.end_turn <= 10

    def test_single_turn_conversation(self, schema):
        conv = random_conversation(Pcg32(1), schema, "c", min_turns=1, max_turns=1)
        cfg = WindowConfig(min_turns=1, max_turns=5, max_segments_per_conversation=2)
        segments = sample_windows(conv, cfg, Pcg32(0))
        assert all(len(seg) == 1 for seg in segments)

    def test_too_short_conversation_yields_nothing(self, schema):
        conv = random_conversation(Pcg32(2), schema, "c", min_turns=3, max_turns=3)
        cfg = WindowConfig(min_turns=4, max_turns=5, max_segments_per_conversation=2)
        assert sample_windows(conv, cfg, Pcg32(0)) == []

    def test_labels_are_or_aggregates(self, schema):
        rng = Pcg32(3)
        for trial in range(200):
            conv = random_conversation(rng, schema, f"c{trial}", min_turns=1, max_turns=9)
            cfg = WindowConfig(min_turns=1, max_turns=5, max_segments_per_conversation=3)
            for seg in sample_windows(conv, cfg, Pcg32(trial)):
                expected = aggregate_labels(
                    [t.labels for t in conv.turns[seg.start_turn:seg.end_turn]]
                )
                assert seg.labels.values == expected.values

    def test_deterministic_per_seed(self, schema):
        conv = random_conversation(Pcg32(4), schema, "c", min_turns=8, max_turns=8)
        cfg = WindowConfig()
        a = sample_windows(conv, cfg, Pcg32(7))
        b = sample_windows(conv, cfg, Pcg32(7))
        assert a == b

    def test_unlabeled_turns_rejected(self, schema):
        conv = random_conversation(Pcg32(5), schema, "c", labeled=False, min_turns=3, max_turns=3)
        with pytest.raises(UnlabeledError):
            sample_windows(conv, WindowConfig(), Pcg32(0))

    def test_bad_configs_rejected(self):
        with pytest.raises(ValueError):
            WindowConfig(min_turns=0)
        with pytest.raises(ValueError):
            WindowConfig(min_turns=3, max_turns=2)
        with pytest.raises(ValueError):
            WindowConfig(batch_probability=1.5)
        with pytest.raises(ValueError):
            WindowConfig(max_segments_per_conversation=-1)


class TestPlanBatchAugmentation:
    def test_probability_zero_is_always_empty(self, schema):
        rng = Pcg32(0)
        batch = [random_conversation(Pcg32(i), schema, f"c{i}", min_turns=5, max_turns=5) for i in range(3)]
        cfg = WindowConfig(batch_probability=0.0)
        assert all(plan_batch_augmentation(batch, cfg, rng) == [] for _ in range(50))

    def test_probability_one_bounded_by_x(self, schema):
        rng = Pcg32(0)
        batch = [random_conversation(Pcg32(i), schema, f"c{i}", min_turns=10, max_turns=10) for i in range(3)]
        cfg = WindowConfig(batch_probability=1.0, max_segments_per_conversation=2)
        segments = plan_batch_augmentation(batch, cfg, rng)
        assert 0 < len(segments) <= 6

    def test_batch_rate_within_binomial_bounds(self, schema):
        batch = [random_conversation(Pcg32(1), schema, "c", min_turns=5, max_turns=5)]
        cfg = WindowConfig(batch_probability=0.5)
        rng = Pcg32(123)
        hits = sum(bool(plan_batch_augmentation(batch, cfg, rng)) for _ in range(1000))
        sigma = (0.25 / 1000) ** 0.5
        assert abs(hits / 1000 - 0.5) <= 3 * sigma


class TestSplitToContextBudget:
    def test_fits_in_one_segment(self, schema):
        conv = conv_with_turns(3, tokens_per_turn=2)
        segments = split_to_context_budget(conv, budget=100, counter=whitespace_counter, separator="[SEP]")
        assert [(s.start_turn, s.end_turn) for s in segments] == [(0, 3)]

    def test_hand_counted_packing(self):
        # 4 turns x 3 tokens, separator costs 1 token, budget 7 -> [0,2) and [2,4)
        conv = conv_with_turns(4, tokens_per_turn=3)
        segments = split_to_context_budget(conv, budget=7, counter=whitespace_counter, separator="[SEP]")
        assert [(s.start_turn, s.end_turn) for s in segments] == [(0, 2), (2, 4)]
        assert not any(s.over_budget for s in segments)

    def test_oversized_single_turn_flagged(self):
        big = " ".join(f"w{k}" for k in range(100))
        conv = Conversation(id="c", source_dataset="d", turns=(Turn("s", big),))
        segments = split_to_context_budget(conv, budget=10, counter=whitespace_counter, separator="[SEP]")
        assert len(segments) == 1
        assert segments[0].over_budget

    def test_partition_properties_on_random_inputs(self, schema):
        rng = Pcg32(6)
        for trial in range(300):
            conv = random_conversation(rng, schema, f"c{trial}", min_turns=1, max_turns=12)
            budget = rng.randint(1, 20)
            segments = split_to_context_budget(conv, budget, whitespace_counter, "[SEP]")
            spans = [(s.start_turn, s.end_turn) for s in segments]
            # disjoint, contiguous, complete, ordered
            assert spans[0][0] == 0
            assert spans[-1][1] == len(conv.turns)
            for (a, b), (c, d) in zip(spans, spans[1:]):
                assert b == c
            for seg in segments:
                rendered = render_model_input(conv, seg.start_turn, seg.end_turn, "[SEP]")
                if not seg.over_budget:
                    assert whitespace_counter(rendered) <= budget
                else:
                    assert len(seg) == 1

    def test_labels_aggregated_when_available(self, schema):
        conv = conv_with_turns(6)
        for seg in split_to_context_budget(conv, 8, whitespace_counter, "[SEP]"):
            expected = aggregate_labels([t.labels for t in conv.turns[seg.start_turn:seg.end_turn]])
            assert seg.labels.values == expected.values

    def test_unlabeled_conversations_get_none_labels(self, schema):
        conv = random_conversation(Pcg32(7), schema, "c", labeled=False, min_turns=4, max_turns=4)
        for seg in split_to_context_budget(conv, 5, whitespace_counter, "[SEP]"):
            assert seg.labels is None

    def test_bad_budget_rejected(self):
        conv = conv_with_turns(2)
        with pytest.raises(ValueError):
            split_to_context_budget(conv, 0, whitespace_counter, "[SEP]")
