"""Regenerate the cross-component golden fixtures (primary side).

Run from the repo root with the primary package installed:

    python interop/generate_fixtures.py

Outputs under interop/golden/:
  corpus.jsonl              mock-labeled conversations (line format)
  conversation_labels.json  {conv_id: {intent: 0|1}} via the primary's OR aggregation
  window_draws.json         window segments for pinned (seed, config) pairs

The trainer package re-derives all three from corpus.jsonl with its own
code; equality is the cross-component parity contract.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from convo_gate import WindowConfig, aggregate_labels, default_schema, sample_windows, write_corpus
from convo_gate.rng import Pcg32

from deskscale import generate_mock_corpus

GOLDEN = Path(__file__).resolve().parent / "golden"

WINDOW_CASES = [
    {"seed": 11, "min_turns": 1, "max_turns": 5, "max_segments_per_conversation": 2},
    {"seed": 29, "min_turns": 2, "max_turns": 4, "max_segments_per_conversation": 3},
    {"seed": 71, "min_turns": 1, "max_turns": 8, "max_segments_per_conversation": 1},
]


def main():
    schema = default_schema()
    corpus = generate_mock_corpus(schema, seed=23, n_action=90, n_info=80,
                                  n_mixed=30, n_neutral=80, n_persona=20)
    GOLDEN.mkdir(parents=True, exist_ok=True)
    write_corpus(corpus, GOLDEN / "corpus.jsonl", schema)

    labels = {
        conv.id: {k: int(v) for k, v in
                  aggregate_labels([t.labels for t in conv.turns]).to_mapping(schema).items()}
        for conv in corpus
    }
    (GOLDEN / "conversation_labels.json").write_text(
        json.dumps(labels, indent=1, sort_keys=True), encoding="utf-8")

    draws = []
    for case in WINDOW_CASES:
        cfg = WindowConfig(min_turns=case["min_turns"], max_turns=case["max_turns"],
                           max_segments_per_conversation=case["max_segments_per_conversation"])
        for conv in corpus[:120]:
            segments = sample_windows(conv, cfg, Pcg32(case["seed"]))
            draws.append({
                "conv_id": conv.id,
                "seed": case["seed"],
                "window": {
                    "min_turns": cfg.min_turns,
                    "max_turns": cfg.max_turns,
                    "max_segments_per_conversation": cfg.max_segments_per_conversation,
                },
                "segments": [[s.start_turn, s.end_turn] for s in segments],
            })
    (GOLDEN / "window_draws.json").write_text(json.dumps(draws, indent=1), encoding="utf-8")
    print(f"wrote {len(corpus)} conversations, {len(labels)} label records, {len(draws)} draw records")


if __name__ == "__main__":
    main()
