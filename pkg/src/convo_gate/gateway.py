"""Filtering front service: classify snippets, forward only the relevant ones.

Each incoming snippet is rendered (speakers dropped, turns SEP-joined),
scored, thresholded, and forwarded downstream only when the configured
predicate is satisfied.  Token counters keep the live reduction accounting
consistent: forwarded plus filtered tokens always equals total tokens.

Classification failures are fail-closed by default: the snippet is counted
as errored, its tokens as filtered, and nothing is forwarded.  Every
decision is appended to an audit log (one JSON object per line) so the
no-bad-forward guarantee can be replayed after the fact.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import httpx

from .augment import split_to_context_budget
from .config import GatewayConfig
from .core import Conversation, IntentSchema, IntentVector, render_model_input
from .corpus import conversation_from_dict, conversation_to_dict
from .errors import BackendError, ConvoGateError
from .evaluation import conversation_tokens, decide, make_counter, predicate_satisfied
from .classifier import load_model

FORWARD = "forward"
FILTER = "filter"


@dataclass(frozen=True)
class FilterDecision:
    snippet_id: str
    scores: IntentVector | None
    decision: str
    matched_intents: tuple[str, ...]
    token_count: int
    timestamp: float
    error: str | None = None


@dataclass(frozen=True)
class GatewayStats:
    total_snippets: int = 0
    forwarded_snippets: int = 0
    errored_snippets: int = 0
    total_tokens: int = 0
    forwarded_tokens: int = 0
    filtered_tokens: int = 0
    per_intent_positive: dict[str, int] | None = None

    @property
    def reduction_so_far_pct(self) -> float:
        if self.total_tokens == 0:
            return 0.0
        return 100.0 * (1.0 - self.forwarded_tokens / self.total_tokens)


class GatewayService:
    """Thread-safe classify/forward service around one loaded model."""

    def __init__(self, config: GatewayConfig, schema: IntentSchema, model=None):
        self.config = config
        self.schema = schema
        self.model = model if model is not None else load_model(config.model_path, schema)
        if config.predicate != "any":
            schema.index_of(config.predicate)  # raises on unknown intents
        if config.thresholds is not None:
            self.thresholds = tuple(float(config.thresholds.get(i, t))
                                    for i, t in zip(schema.ids, self.model.thresholds))
        else:
            self.thresholds = tuple(self.model.thresholds)
        self.counter = make_counter(config.counter, self.model)
        self._lock = threading.Lock()
        self._stats = {
            "total_snippets": 0, "forwarded_snippets": 0, "errored_snippets": 0,
            "total_tokens": 0, "forwarded_tokens": 0, "filtered_tokens": 0,
        }
        self._per_intent = {i: 0 for i in schema.ids}
        self._audit_lock = threading.Lock()
        self._audit_fh = open(config.audit_log, "a", encoding="utf-8") if config.audit_log else None
        # fresh connection per forward: keep-alive reuse races connection
        # expiry under concurrent handlers, and handshakes are cheap next to
        # a downstream LLM call
        self._downstream = (
            httpx.Client(timeout=config.downstream_timeout,
                         limits=httpx.Limits(max_keepalive_connections=0))
            if config.downstream_url else None
        )

    # ------------------------------------------------------------- scoring

    def score_snippet(self, snippet: Conversation) -> IntentVector:
        """Scores for one snippet; over-budget snippets score as the
        per-intent max over their context-budget sub-segments."""
        if self.config.context_budget is None:
            return self.model.predict(render_model_input(snippet, separator=self.config.separator))
        segments = split_to_context_budget(snippet, self.config.context_budget,
                                           self.counter, self.config.separator)
        best = [0.0] * len(self.schema)
        for seg in segments:
            text = render_model_input(snippet, seg.start_turn, seg.end_turn, self.config.separator)
            scores = self.model.predict(text)
            best = [max(b, s) for b, s in zip(best, scores.values)]
        return IntentVector(tuple(best), kind="score")

    def classify(self, snippet: Conversation) -> FilterDecision:
        """Decide forward/filter for a snippet and update the accounting.

        On a backend failure the snippet counts as errored; fail-closed
        (the default) re-raises so callers can surface a 503, fail-open
        forwards with empty scores and an error marker.
        """
        tokens = conversation_tokens(snippet, self.counter)
        try:
            scores = self.score_snippet(snippet)
        except Exception as exc:
            decision = FilterDecision(
                snippet_id=snippet.id, scores=None,
                decision=FORWARD if self.config.fail_open else FILTER,
                matched_intents=(), token_count=tokens, timestamp=time.time(),
                error=str(exc),
            )
            self._account(decision, decided=None)
            self._audit(decision)
            if not self.config.fail_open:
                raise BackendError(f"classification failed for snippet {snippet.id!r}: {exc}") from exc
            return decision
        decided = decide(scores, self.thresholds)
        matched = tuple(i for i, v in zip(self.schema.ids, decided.values) if v)
        forward = predicate_satisfied(decided, self.config.predicate, self.schema)
        decision = FilterDecision(
            snippet_id=snippet.id, scores=scores,
            decision=FORWARD if forward else FILTER,
            matched_intents=matched, token_count=tokens, timestamp=time.time(),
        )
        self._account(decision, decided=decided)
        self._audit(decision)
        return decision

    def _account(self, decision: FilterDecision, decided: IntentVector | None) -> None:
        with self._lock:
            self._stats["total_snippets"] += 1
            self._stats["total_tokens"] += decision.token_count
            if decision.error is not None:
                self._stats["errored_snippets"] += 1
            if decision.decision == FORWARD:
                self._stats["forwarded_snippets"] += 1
                self._stats["forwarded_tokens"] += decision.token_count
            else:
                self._stats["filtered_tokens"] += decision.token_count
            if decided is not None:
                for intent, v in zip(self.schema.ids, decided.values):
                    if v:
                        self._per_intent[intent] += 1

    def _audit(self, decision: FilterDecision) -> None:
        if self._audit_fh is None:
            return
        record = {
            "ts": decision.timestamp,
            "snippet_id": decision.snippet_id,
            "decision": decision.decision,
            "scores": (dict(zip(self.schema.ids, decision.scores.values))
                       if decision.scores is not None else None),
            "thresholds": dict(zip(self.schema.ids, self.thresholds)),
            "predicate": self.config.predicate,
            "matched": list(decision.matched_intents),
            "tokens": decision.token_count,
            "error": decision.error,
        }
        line = json.dumps(record, ensure_ascii=False) + "\n"
        with self._audit_lock:
            self._audit_fh.write(line)
            self._audit_fh.flush()

    # ---------------------------------------------------------- forwarding

    def filter(self, snippet: Conversation) -> tuple[FilterDecision, dict | None]:
        """Classify, then relay forwarded snippets to the downstream LLM.

        The decision and counters are settled before any downstream call;
        a downstream failure is recorded and surfaced, never retroactively
        unforwarded.
        """
        decision = self.classify(snippet)
        if decision.decision != FORWARD:
            return decision, None
        if self._downstream is None:
            return decision, {"delivered": False, "reason": "no downstream configured"}
        body = conversation_to_dict(snippet, self.schema)
        headers = {
            "X-Convo-Gate-Decision": decision.decision,
            "X-Convo-Gate-Matched": ",".join(decision.matched_intents),
            "X-Convo-Gate-Tokens": str(decision.token_count),
        }
        try:
            try:
                response = self._downstream.post(self.config.downstream_url, json=body, headers=headers)
            except (httpx.ConnectError, httpx.RemoteProtocolError):
                # stale keep-alive connection; safe to retry before any response
                response = self._downstream.post(self.config.downstream_url, json=body, headers=headers)
        except httpx.HTTPError as exc:
            return decision, {"delivered": False, "error": f"downstream error for {snippet.id!r}: {exc}"}
        if response.status_code >= 400:
            return decision, {"delivered": False,
                              "error": f"downstream returned {response.status_code} for {snippet.id!r}"}
        try:
            downstream_body = response.json()
        except ValueError:
            downstream_body = response.text
        return decision, {"delivered": True, "status": response.status_code, "response": downstream_body}

    # --------------------------------------------------------------- stats

    def stats(self) -> GatewayStats:
        with self._lock:
            return GatewayStats(per_intent_positive=dict(self._per_intent), **self._stats)

    def close(self) -> None:
        if self._audit_fh is not None:
            self._audit_fh.close()
        if self._downstream is not None:
            self._downstream.close()


def decision_to_dict(decision: FilterDecision, schema: IntentSchema) -> dict:
    return {
        "snippet_id": decision.snippet_id,
        "scores": (dict(zip(schema.ids, decision.scores.values))
                   if decision.scores is not None else None),
        "decision": decision.decision,
        "matched_intents": list(decision.matched_intents),
        "token_count": decision.token_count,
        "timestamp": decision.timestamp,
        "error": decision.error,
    }


def verify_audit_log(path: str | Path) -> list[str]:
    """Replay an audit log; returns violations (forwards that fail the predicate).

    Each record is self-contained (scores, thresholds, predicate), so the
    check needs no model.
    """
    violations = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            if record["decision"] != FORWARD or record.get("error"):
                continue
            scores = record["scores"] or {}
            thresholds = record["thresholds"]
            positives = {i for i, s in scores.items() if s >= thresholds[i]}
            predicate = record["predicate"]
            ok = bool(positives) if predicate == "any" else predicate in positives
            if not ok:
                violations.append(
                    f"line {line_no}: snippet {record['snippet_id']!r} forwarded but fails "
                    f"predicate {predicate!r} (positives: {sorted(positives)})"
                )
    return violations


def create_app(service: GatewayService):
    """FastAPI wrapper over a service; handlers run in the threadpool."""
    from fastapi import FastAPI, HTTPException

    app = FastAPI(title="convo-gate", version="0.1.0")

    def parse_snippet(body: dict) -> Conversation:
        try:
            return conversation_from_dict(body, service.schema)
        except (KeyError, TypeError, ValueError, ConvoGateError) as exc:
            raise HTTPException(status_code=400, detail=f"bad snippet: {exc}") from exc

    @app.post("/v1/classify")
    def classify(body: dict):
        snippet = parse_snippet(body)
        try:
            decision = service.classify(snippet)
        except BackendError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        return decision_to_dict(decision, service.schema)

    @app.post("/v1/filter")
    def filter_endpoint(body: dict):
        snippet = parse_snippet(body)
        try:
            decision, downstream = service.filter(snippet)
        except BackendError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        return {"decision": decision_to_dict(decision, service.schema), "downstream": downstream}

    @app.get("/v1/stats")
    def stats():
        snapshot = service.stats()
        payload = asdict(snapshot)
        payload["reduction_so_far_pct"] = snapshot.reduction_so_far_pct
        return payload

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    return app


def run_batch_filter(service: GatewayService, convs: Iterable[Conversation],
                     out_path: str | Path | None) -> GatewayStats:
    """Offline batch mode: classify a corpus, write forwarded snippets out."""
    out_fh = open(out_path, "w", encoding="utf-8") if out_path else None
    try:
        for conv in convs:
            decision = service.classify(conv)
            if decision.decision == FORWARD and out_fh is not None:
                out_fh.write(json.dumps(conversation_to_dict(conv, service.schema), ensure_ascii=False) + "\n")
    finally:
        if out_fh is not None:
            out_fh.close()
    return service.stats()
