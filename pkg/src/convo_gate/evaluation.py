"""Classification metrics and token-reduction accounting.

Reduction is measured at the filtering unit (a conversation or snippet):
``100 * (1 - kept_tokens / total_tokens)`` where the kept tokens are those
of conversations satisfying the predicate, under reference labels
("expected") or under model predictions ("actual").  A predicate is one
intent id or "any", the OR over every configured intent.  One report must
use one token counter throughout, otherwise the two sides are not
comparable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .core import Conversation, IntentSchema, IntentVector, conversation_label, render_model_input
from .errors import ReportError, SchemaMismatchError

TokenCounter = Callable[[str], int]

ANY_PREDICATE = "any"


def whitespace_counter(text: str) -> int:
    """Number of maximal non-whitespace runs."""
    return len(text.split())


def make_counter(kind: str, model=None) -> TokenCounter:
    """Build a token counter: "whitespace" or "external-tokenizer".

    The external counter delegates to a loaded external model's tokenizer
    for billing-faithful counts.
    """
    if kind == "whitespace":
        return whitespace_counter
    if kind == "external-tokenizer":
        count = getattr(model, "count_tokens", None)
        if count is None:
            raise ReportError("external-tokenizer counting needs a loaded external model bundle")
        return count
    raise ValueError(f"unknown counter kind {kind!r}")


def conversation_tokens(conv: Conversation, counter: TokenCounter) -> int:
    """Token count of a conversation: the sum over its turn texts."""
    return sum(counter(t.text) for t in conv.turns)


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class PRF1:
    """Precision/recall/F1 for the positive class of one intent.

    ``degenerate`` marks results where a zero denominator forced a 0.0.
    """

    precision: float
    recall: float
    f1: float
    degenerate: bool = False


def confusion_counts(references: Sequence[IntentVector], predictions: Sequence[IntentVector],
                     schema: IntentSchema) -> dict[str, Confusion]:
    """Per-intent confusion counts over parallel reference/prediction vectors."""
    if len(references) != len(predictions):
        raise ValueError(f"{len(references)} references vs {len(predictions)} predictions")
    tallies = {intent: [0, 0, 0, 0] for intent in schema.ids}
    for ref, pred in zip(references, predictions):
        if len(ref) != len(schema) or len(pred) != len(schema):
            raise SchemaMismatchError("vector length does not match schema")
        for i, intent in enumerate(schema.ids):
            r, p = int(ref.values[i]), int(pred.values[i])
            if r and p:
                tallies[intent][0] += 1
            elif not r and p:
                tallies[intent][1] += 1
            elif r and not p:
                tallies[intent][2] += 1
            else:
                tallies[intent][3] += 1
    return {intent: Confusion(*t) for intent, t in tallies.items()}


def prf1_from_counts(counts: Confusion) -> PRF1:
    degenerate = False
    if counts.tp + counts.fp:
        precision = counts.tp / (counts.tp + counts.fp)
    else:
        precision, degenerate = 0.0, True
    if counts.tp + counts.fn:
        recall = counts.tp / (counts.tp + counts.fn)
    else:
        recall, degenerate = 0.0, True
    if precision + recall:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1, degenerate = 0.0, True
    return PRF1(precision=precision, recall=recall, f1=f1, degenerate=degenerate)


def prf1(references: Sequence[IntentVector], predictions: Sequence[IntentVector],
         schema: IntentSchema, intent: str) -> PRF1:
    """P/R/F1 for the positive occurrences of one intent."""
    return prf1_from_counts(confusion_counts(references, predictions, schema)[intent])


def predicate_satisfied(labels: IntentVector, predicate: str, schema: IntentSchema) -> bool:
    """Whether a label vector matches an intent predicate ("any" = OR)."""
    if predicate == ANY_PREDICATE:
        return any(v >= 1 for v in labels.values)
    return labels.values[schema.index_of(predicate)] >= 1


def _reduction(convs: Sequence[Conversation], keep: Sequence[bool], counter: TokenCounter) -> tuple[int, int, float]:
    tokens = [conversation_tokens(c, counter) for c in convs]
    total = sum(tokens)
    if total == 0:
        raise ReportError("reduction is undefined for a corpus with zero total tokens")
    kept = sum(t for t, k in zip(tokens, keep) if k)
    return total, kept, 100.0 * (1.0 - kept / total)


def expected_reduction(convs: Sequence[Conversation], predicate: str, schema: IntentSchema,
                       counter: TokenCounter) -> float:
    """Reduction under reference labels: tokens NOT forwarded, in percent."""
    keep = [predicate_satisfied(conversation_label(c), predicate, schema) for c in convs]
    return _reduction(convs, keep, counter)[2]


def actual_reduction(convs: Sequence[Conversation], predictions: Sequence[IntentVector],
                     predicate: str, schema: IntentSchema, counter: TokenCounter) -> float:
    """Reduction under model predictions (one binary vector per conversation)."""
    if len(predictions) != len(convs):
        raise ReportError(f"{len(predictions)} predictions for {len(convs)} conversations")
    keep = [predicate_satisfied(p, predicate, schema) for p in predictions]
    return _reduction(convs, keep, counter)[2]


@dataclass(frozen=True)
class PredicateReduction:
    reference_tokens: int
    prediction_tokens: int
    expected_reduction_pct: float
    actual_reduction_pct: float


@dataclass(frozen=True)
class ReductionReport:
    """Per-dataset token accounting across predicates (intents plus "any")."""

    dataset: str
    total_tokens: int
    per_predicate: dict[str, PredicateReduction]
    per_intent_metrics: dict[str, PRF1]


def decide(scores: IntentVector, thresholds: Sequence[float]) -> IntentVector:
    """Threshold scores into binary labels; a score equal to its threshold is positive."""
    if len(scores) != len(thresholds):
        raise SchemaMismatchError(f"{len(scores)} scores vs {len(thresholds)} thresholds")
    return IntentVector(tuple(1 if s >= t else 0 for s, t in zip(scores.values, thresholds)), kind="binary")


def build_report(datasets: Sequence[tuple[str, Sequence[Conversation]]], model,
                 schema: IntentSchema, predicates: Sequence[str],
                 counter: TokenCounter, separator: str = "[SEP]") -> list[ReductionReport]:
    """Evaluate a model across datasets: per-intent P/R/F1 plus reductions.

    ``model`` needs ``predict(text) -> IntentVector`` and ``thresholds``;
    conversations are rendered whole (with ``separator``, which must match
    the model's training rendering), as the filtering unit.  Datasets are
    reported in name order for deterministic output.
    """
    reports = []
    for name, convs in sorted(datasets, key=lambda item: item[0]):
        references = [conversation_label(c) for c in convs]
        predictions = [decide(model.predict(render_model_input(c, separator=separator)),
                              model.thresholds) for c in convs]
        counts = confusion_counts(references, predictions, schema)
        metrics = {intent: prf1_from_counts(counts[intent]) for intent in schema.ids}
        per_predicate = {}
        if convs:
            tokens = [conversation_tokens(c, counter) for c in convs]
            total = sum(tokens)
            if total == 0:
                raise ReportError(f"dataset {name!r} has zero total tokens")
            for predicate in predicates:
                ref_keep = [predicate_satisfied(r, predicate, schema) for r in references]
                pred_keep = [predicate_satisfied(p, predicate, schema) for p in predictions]
                ref_tokens = sum(t for t, k in zip(tokens, ref_keep) if k)
                pred_tokens = sum(t for t, k in zip(tokens, pred_keep) if k)
                per_predicate[predicate] = PredicateReduction(
                    reference_tokens=ref_tokens,
                    prediction_tokens=pred_tokens,
                    expected_reduction_pct=100.0 * (1.0 - ref_tokens / total),
                    actual_reduction_pct=100.0 * (1.0 - pred_tokens / total),
                )
            reports.append(ReductionReport(dataset=name, total_tokens=total,
                                           per_predicate=per_predicate, per_intent_metrics=metrics))
        else:
            reports.append(ReductionReport(dataset=name, total_tokens=0,
                                           per_predicate={}, per_intent_metrics=metrics))
    return reports


def render_report_table(reports: Sequence[ReductionReport], schema: IntentSchema,
                        predicates: Sequence[str]) -> str:
    """Aligned text tables: one for metrics, one for reductions."""
    lines = []
    header = ["dataset"] + [f"{i} P/R/F1" for i in schema.ids]
    rows = [header]
    for r in reports:
        row = [r.dataset]
        for intent in schema.ids:
            m = r.per_intent_metrics[intent]
            flag = "*" if m.degenerate else ""
            row.append(f"{m.precision:.2f}/{m.recall:.2f}/{m.f1:.2f}{flag}")
        rows.append(row)
    lines.extend(_align(rows))
    lines.append("")
    header = ["dataset", "total tokens"]
    for p in predicates:
        header += [f"{p} exp%", f"{p} act%"]
    rows = [header]
    for r in reports:
        row = [r.dataset, str(r.total_tokens)]
        for p in predicates:
            pr = r.per_predicate.get(p)
            row += ([f"{pr.expected_reduction_pct:.2f}", f"{pr.actual_reduction_pct:.2f}"]
                    if pr else ["-", "-"])
        rows.append(row)
    lines.extend(_align(rows))
    lines.append("(* marks degenerate metrics from zero denominators)")
    return "\n".join(lines)


def _align(rows: list[list[str]]) -> list[str]:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]


def write_reports(reports: Iterable[ReductionReport], path: str | Path) -> int:
    """One JSON object per line, mirroring the corpus file encoding."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for r in reports:
            record = {
                "dataset": r.dataset,
                "total_tokens": r.total_tokens,
                "per_predicate": {
                    p: {
                        "reference_tokens": v.reference_tokens,
                        "prediction_tokens": v.prediction_tokens,
                        "expected_reduction_pct": v.expected_reduction_pct,
                        "actual_reduction_pct": v.actual_reduction_pct,
                    }
                    for p, v in r.per_predicate.items()
                },
                "per_intent_metrics": {
                    i: {"precision": m.precision, "recall": m.recall, "f1": m.f1, "degenerate": m.degenerate}
                    for i, m in r.per_intent_metrics.items()
                },
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            n += 1
    return n
