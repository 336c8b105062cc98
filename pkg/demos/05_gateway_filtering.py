"""The filtering gateway, driven in-process.

The service classifies snippets, forwards predicate matches downstream,
and keeps exact token accounting. Here it runs against a quickly
distilled baseline; `convo-gate serve --config FILE` exposes the same
service over HTTP (POST /v1/classify, POST /v1/filter, GET /v1/stats).
"""

import tempfile
from pathlib import Path

from convo_gate import (
    Conversation,
    GatewayService,
    MockTeacher,
    TrainConfig,
    Turn,
    WindowConfig,
    default_schema,
    generate_from_seeds,
    label_corpus,
    train_baseline,
    verify_audit_log,
)
from convo_gate.config import GatewayConfig

schema = default_schema()

# Distill a small model from the mock teacher (see demo 02 for the details).
seeds = [f"remind me to water plant {i}" for i in range(40)]
seeds += [f"what is fact number {i}" for i in range(40)]
seeds += [f"the hallway got repainted ({i})" for i in range(40)]
labeled = list(label_corpus(
    generate_from_seeds(seeds, "mixed", MockTeacher(), source_dataset="demo-gateway"),
    schema, MockTeacher()))
model, _ = train_baseline(labeled[::2], labeled[1::2], schema,
                          TrainConfig(epochs=5, window=WindowConfig(), seed=1))

workdir = Path(tempfile.mkdtemp(prefix="convo-gate-demo-"))
model_path = workdir / "model.cgbl"
model.save(model_path)

config = GatewayConfig(
    model_path=str(model_path),
    predicate="any",
    audit_log=str(workdir / "audit.jsonl"),
)
service = GatewayService(config, schema)

snippets = [
    Conversation(id="s1", source_dataset="live",
                 turns=(Turn("Ann", "can you remind me about the retro"),)),
    Conversation(id="s2", source_dataset="live",
                 turns=(Turn("Bo", "the hallway got repainted"),)),
    Conversation(id="s3", source_dataset="live",
                 turns=(Turn("Cy", "what is the wifi password"),)),
]

for snippet in snippets:
    decision = service.classify(snippet)
    print(f"{snippet.id}: {decision.decision:7s} matched={list(decision.matched_intents)} "
          f"tokens={decision.token_count}")

stats = service.stats()
print(f"\nforwarded {stats.forwarded_snippets}/{stats.total_snippets} snippets; "
      f"tokens {stats.forwarded_tokens}/{stats.total_tokens} forwarded "
      f"({stats.reduction_so_far_pct:.1f}% reduction so far)")
assert stats.forwarded_tokens + stats.filtered_tokens == stats.total_tokens

service.close()
print("audit violations:", verify_audit_log(workdir / "audit.jsonl"))
