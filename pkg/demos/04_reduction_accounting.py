"""Token-reduction accounting: expected vs actual.

Reduction is the share of tokens NOT forwarded to the downstream LLM.
"Expected" uses reference labels; "actual" uses model predictions. An
oracle model reproduces the expected numbers exactly.
"""

from convo_gate import (
    Conversation,
    IntentVector,
    Turn,
    actual_reduction,
    build_report,
    conversation_label,
    default_schema,
    expected_reduction,
    render_model_input,
    whitespace_counter,
)
from convo_gate.evaluation import render_report_table

schema = default_schema()


def conv(conv_id, n_tokens, labels):
    text = " ".join(f"w{i}" for i in range(n_tokens))
    vec = IntentVector(labels)
    return Conversation(id=conv_id, source_dataset="demo",
                        turns=(Turn("s", text, labels=vec),), labels=vec)


corpus = [
    conv("a", 100, (1, 0)),   # action only
    conv("b", 300, (0, 1)),   # info only
    conv("c", 200, (0, 0)),   # neither
    conv("d", 400, (1, 1)),   # both
]

for predicate in ("action-triggering", "information-seeking", "any"):
    pct = expected_reduction(corpus, predicate, schema, whitespace_counter)
    print(f"expected reduction [{predicate}]: {pct:.2f}%")


class OracleModel:
    """Scores that threshold back to the reference labels."""

    thresholds = (0.5, 0.5)

    def predict(self, text):
        for c in corpus:
            if render_model_input(c) == text:
                label = conversation_label(c)
                return IntentVector(tuple(0.9 if v else 0.1 for v in label.values), kind="score")
        raise KeyError(text)


oracle = [conversation_label(c) for c in corpus]
pct = actual_reduction(corpus, oracle, "any", schema, whitespace_counter)
print(f"actual reduction with oracle predictions [any]: {pct:.2f}%")

print()
reports = build_report([("demo", corpus)], OracleModel(), schema,
                       ["action-triggering", "information-seeking", "any"], whitespace_counter)
print(render_report_table(reports, schema, ["action-triggering", "information-seeking", "any"]))
