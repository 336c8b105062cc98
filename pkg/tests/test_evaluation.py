import pytest

from convo_gate.core import Conversation, IntentVector, Turn, conversation_label, default_schema
from convo_gate.errors import ReportError
from convo_gate.evaluation import (
    Confusion,
    actual_reduction,
    build_report,
    confusion_counts,
    conversation_tokens,
    decide,
    expected_reduction,
    make_counter,
    predicate_satisfied,
    prf1,
    prf1_from_counts,
    render_report_table,
    whitespace_counter,
    write_reports,
)
from convo_gate.rng import Pcg32

from conftest import random_conversation

SCHEMA = default_schema()


def vec(*values):
    return IntentVector(tuple(values), kind="binary")


def conv_with_tokens(conv_id, n_tokens, labels):
    text = " ".join(f"w{i}" for i in range(n_tokens))
    return Conversation(id=conv_id, source_dataset="d",
                        turns=(Turn("s", text, labels=vec(*labels)),), labels=vec(*labels))


class TestCounters:
    @pytest.mark.parametrize("text,expected", [
        ("set a reminder", 3),
        ("", 0),
        ("  a   b ", 2),
        ("one\ttwo\nthree", 3),
    ])
    def test_whitespace_counter(self, text, expected):
        assert whitespace_counter(text) == expected

    def test_make_counter_whitespace(self):
        assert make_counter("whitespace")("a b") == 2

    def test_external_counter_requires_model(self):
        with pytest.raises(ReportError):
            make_counter("external-tokenizer", model=None)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            make_counter("bytes")

    def test_conversation_tokens_sums_turn_texts(self):
        conv = Conversation(id="c", source_dataset="d",
                            turns=(Turn("s", "a b"), Turn("s", "c d e")))
        assert conversation_tokens(conv, whitespace_counter) == 5


class TestPrf1:
    def test_hand_case(self):
        m = prf1_from_counts(Confusion(tp=2, fp=1, fn=1, tn=0))
        assert abs(m.precision - 0.6667) < 1e-4
        assert abs(m.recall - 0.6667) < 1e-4
        assert abs(m.f1 - 0.6667) < 1e-4
        assert not m.degenerate

    def test_perfect_case(self):
        m = prf1_from_counts(Confusion(tp=7, fp=0, fn=0, tn=3))
        assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)

    def test_degenerate_case(self):
        m = prf1_from_counts(Confusion(tp=0, fp=0, fn=0, tn=5))
        assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)
        assert m.degenerate

    def test_matches_brute_force_recount(self):
        rng = Pcg32(1)
        for _ in range(500):
            n = rng.randint(1, 40)
            refs = [vec(rng.bounded(2), rng.bounded(2)) for _ in range(n)]
            preds = [vec(rng.bounded(2), rng.bounded(2)) for _ in range(n)]
            counts = confusion_counts(refs, preds, SCHEMA)
            for idx, intent in enumerate(SCHEMA.ids):
                tp = sum(1 for r, p in zip(refs, preds) if r.values[idx] and p.values[idx])
                fp = sum(1 for r, p in zip(refs, preds) if not r.values[idx] and p.values[idx])
                fn = sum(1 for r, p in zip(refs, preds) if r.values[idx] and not p.values[idx])
                tn = n - tp - fp - fn
                assert counts[intent] == Confusion(tp, fp, fn, tn)
                assert counts[intent].total == n

    def test_prf1_by_intent(self):
        refs = [vec(1, 0), vec(1, 0), vec(0, 1)]
        preds = [vec(1, 0), vec(0, 0), vec(1, 1)]
        m = prf1(refs, preds, SCHEMA, "action-triggering")
        assert m.precision == 0.5 and m.recall == 0.5


class TestReductions:
    def test_expected_hand_sum(self):
        convs = [conv_with_tokens("a", 10, (0, 0)), conv_with_tokens("b", 20, (1, 0)),
                 conv_with_tokens("c", 30, (0, 0))]
        pct = expected_reduction(convs, "action-triggering", SCHEMA, whitespace_counter)
        assert abs(pct - 100 * (1 - 20 / 60)) < 1e-9

    def test_all_have_intent(self):
        convs = [conv_with_tokens(str(i), 10, (1, 0)) for i in range(3)]
        assert expected_reduction(convs, "action-triggering", SCHEMA, whitespace_counter) == 0.0

    def test_none_have_intent(self):
        convs = [conv_with_tokens(str(i), 10, (0, 1)) for i in range(3)]
        assert expected_reduction(convs, "action-triggering", SCHEMA, whitespace_counter) == 100.0

    def test_actual_hand_sum(self):
        convs = [conv_with_tokens("a", 10, (0, 0)), conv_with_tokens("b", 20, (0, 0)),
                 conv_with_tokens("c", 30, (0, 0))]
        preds = [vec(1, 0), vec(0, 0), vec(1, 0)]
        pct = actual_reduction(convs, preds, "action-triggering", SCHEMA, whitespace_counter)
        assert abs(pct - 100 * (1 - 40 / 60)) < 1e-9

    def test_actual_all_positive_is_zero(self):
        convs = [conv_with_tokens(str(i), 5, (0, 0)) for i in range(4)]
        preds = [vec(1, 1)] * 4
        assert actual_reduction(convs, preds, "any", SCHEMA, whitespace_counter) == 0.0

    def test_oracle_predictions_match_expected_exactly(self):
        rng = Pcg32(2)
        for trial in range(200):
            convs = [random_conversation(rng, SCHEMA, f"c{i}") for i in range(rng.randint(1, 15))]
            oracle = [conversation_label(c) for c in convs]
            for predicate in ("action-triggering", "information-seeking", "any"):
                e = expected_reduction(convs, predicate, SCHEMA, whitespace_counter)
                a = actual_reduction(convs, oracle, predicate, SCHEMA, whitespace_counter)
                assert abs(e - a) < 1e-9

    def test_any_reduction_bounded_by_single_intents(self):
        rng = Pcg32(3)
        for trial in range(200):
            convs = [random_conversation(rng, SCHEMA, f"c{i}") for i in range(rng.randint(1, 15))]
            any_red = expected_reduction(convs, "any", SCHEMA, whitespace_counter)
            for intent in SCHEMA.ids:
                assert any_red <= expected_reduction(convs, intent, SCHEMA, whitespace_counter) + 1e-12

    def test_reference_plus_negative_tokens_close(self):
        rng = Pcg32(4)
        convs = [random_conversation(rng, SCHEMA, f"c{i}") for i in range(20)]
        total = sum(conversation_tokens(c, whitespace_counter) for c in convs)
        kept = sum(conversation_tokens(c, whitespace_counter) for c in convs
                   if predicate_satisfied(conversation_label(c), "any", SCHEMA))
        dropped = sum(conversation_tokens(c, whitespace_counter) for c in convs
                      if not predicate_satisfied(conversation_label(c), "any", SCHEMA))
        assert kept + dropped == total

    def test_prediction_coverage_enforced(self):
        convs = [conv_with_tokens("a", 5, (1, 0))]
        with pytest.raises(ReportError, match="predictions"):
            actual_reduction(convs, [], "any", SCHEMA, whitespace_counter)

    def test_zero_tokens_undefined(self):
        with pytest.raises(ReportError, match="zero total"):
            expected_reduction([], "any", SCHEMA, whitespace_counter)


class OracleModel:
    """Predicts scores that threshold back to the reference labels."""

    thresholds = (0.5, 0.5)

    def __init__(self, mapping):
        self.mapping = mapping

    def predict(self, text):
        return self.mapping[text]


class TestBuildReport:
    def make_dataset(self):
        convs = [conv_with_tokens("a", 10, (1, 0)), conv_with_tokens("b", 20, (0, 1)),
                 conv_with_tokens("c", 30, (0, 0))]
        mapping = {}
        from convo_gate.core import render_model_input
        for c in convs:
            label = conversation_label(c)
            mapping[render_model_input(c)] = IntentVector(
                tuple(0.9 if v else 0.1 for v in label.values), kind="score")
        return convs, OracleModel(mapping)

    def test_oracle_rows_have_equal_reductions(self):
        convs, model = self.make_dataset()
        reports = build_report([("ds", convs)], model, SCHEMA,
                               ["action-triggering", "information-seeking", "any"], whitespace_counter)
        assert len(reports) == 1
        report = reports[0]
        assert set(report.per_predicate) == {"action-triggering", "information-seeking", "any"}
        for predicate, row in report.per_predicate.items():
            assert row.reference_tokens == row.prediction_tokens
            assert abs(row.expected_reduction_pct - row.actual_reduction_pct) < 1e-12
        for intent in SCHEMA.ids:
            assert report.per_intent_metrics[intent].f1 == 1.0

    def test_empty_dataset_list(self):
        assert build_report([], OracleModel({}), SCHEMA, ["any"], whitespace_counter) == []

    def test_three_predicate_columns(self):
        convs, model = self.make_dataset()
        predicates = ["action-triggering", "information-seeking", "any"]
        reports = build_report([("ds", convs)], model, SCHEMA, predicates, whitespace_counter)
        table = render_report_table(reports, SCHEMA, predicates)
        for p in predicates:
            assert f"{p} exp%" in table

    def test_datasets_sorted_by_name(self):
        convs, model = self.make_dataset()
        reports = build_report([("zz", convs), ("aa", convs)], model, SCHEMA, ["any"], whitespace_counter)
        assert [r.dataset for r in reports] == ["aa", "zz"]

    def test_write_reports_round_trip(self, tmp_path):
        import json

        convs, model = self.make_dataset()
        reports = build_report([("ds", convs)], model, SCHEMA, ["any"], whitespace_counter)
        path = tmp_path / "reports.jsonl"
        assert write_reports(reports, path) == 1
        record = json.loads(path.read_text().splitlines()[0])
        assert record["dataset"] == "ds"
        assert record["total_tokens"] == 60
        assert "any" in record["per_predicate"]
