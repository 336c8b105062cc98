"""Regenerate the committed interop bundle (trainer side).

Run from the repo root with the trainer package installed:

    python interop/build_bundle.py

Splits the golden corpus, drives the `trainer` CLI (finetune + export),
and leaves the self-verified bundle in interop/bundle/.  The gateway
toolkit's test_secondary_interop.py then checks that load_external
reproduces the bundle's recorded fixture predictions.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

INTEROP = Path(__file__).resolve().parent
GOLDEN = INTEROP / "golden" / "corpus.jsonl"

CONFIG_TEMPLATE = """\
data:
  train: {train}
  validation: {val}
out: {ckpt}
model:
  preset: tiny
  vocab_size: 800
  max_length: 48
  hidden: 32
  heads: 2
  layers: 2
  ff: 64
train:
  learning_rate: 0.001
  batch_size: 24
  epochs: 20
  weight_decay: 0.01
  eval_every: 30
  seed: 5
window:
  min_turns: 1
  max_turns: 5
  max_segments_per_conversation: 2
  batch_probability: 0.5
"""


def main():
    lines = GOLDEN.read_text(encoding="utf-8").splitlines()
    with tempfile.TemporaryDirectory(prefix="interop-bundle-") as tmp:
        tmp = Path(tmp)
        (tmp / "train.jsonl").write_text(
            "\n".join(l for i, l in enumerate(lines) if i % 3 != 2) + "\n", encoding="utf-8")
        (tmp / "val.jsonl").write_text(
            "\n".join(l for i, l in enumerate(lines) if i % 3 == 2) + "\n", encoding="utf-8")
        config = tmp / "finetune.yaml"
        config.write_text(CONFIG_TEMPLATE.format(
            train=tmp / "train.jsonl", val=tmp / "val.jsonl", ckpt=tmp / "ckpt"))
        subprocess.run(["trainer", "finetune", "--config", str(config)], check=True)
        subprocess.run(["trainer", "export", "--ckpt", str(tmp / "ckpt"),
                        "--out", str(INTEROP / "bundle")], check=True)
        log = json.loads((tmp / "ckpt" / "training_log.json").read_text())
        best = max(s["mean_f1"] for s in log["snapshots"])
    fixture = json.loads((INTEROP / "bundle" / "fixture_predictions.json").read_text())
    print(f"bundle ready: best val mean F1 {best:.3f}, "
          f"self-verify worst delta {fixture['worst_self_verify_delta']:.2e}")


if __name__ == "__main__":
    sys.exit(main())
