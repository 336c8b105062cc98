"""Checkpoint export: build the ONNX bundle and self-verify it.

The bundle directory layout is the gateway toolkit's load_external
contract: model.onnx (inputs input_ids/attention_mask, output logits),
tokenizer.json, metadata.json.  Export always replays 32 fixture texts
through the emitted graph and compares sigmoid probabilities against the
native torch model; a worst-case difference above 1e-3 fails the export.
"""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import numpy as np
import torch

from . import onnx_wire as wire
from .model import IntentEncoder
from .onnx_exec import BundleRuntime
from .tokenizer import WordVocabTokenizer
from .train import load_checkpoint

VERIFY_TOLERANCE = 1e-3

FIXTURE_TEXTS = [
    "please remind me to send the slides",
    "can you schedule the sync for tomorrow",
    "i will take care of the invoice tonight",
    "add the roster review to my todo list",
    "new task for the sprint: close the ticket",
    "i promise to water the plants on friday",
    "remind me to call mom [SEP] sure, go ahead",
    "schedule a demo for next week [SEP] done, added to the list",
    "what is the capital of peru",
    "how do i bake bread",
    "why does the build keep failing",
    "tell me about tide patterns",
    "who owns the importer now",
    "where can i find the backlog notes",
    "do you know the eta for the deploy?",
    "what is an espresso ratio [SEP] of course",
    "morning folks.",
    "the commute was rough today",
    "lunch at the new place was great",
    "the office plants are thriving",
    "my headphones died again",
    "true, the days blur together",
    "we should grab lunch again soon",
    "the weather finally turned nice",
    "quick thing while everyone is here. [SEP] yep, listening.",
    "oh, before i forget. [SEP] go for it.",
    "can you merge the pipeline at noon [SEP] okay, will do that now.",
    "what is rust lifetimes [SEP] honestly it went by so fast.",
    "i finally fixed my bike over the break",
    "traffic was brutal this morning",
    "remind me to renew the passport next week [SEP] got it, noted.",
    "",
]


class ExportError(RuntimeError):
    def __init__(self, message: str, worst_delta: float | None = None):
        self.worst_delta = worst_delta
        super().__init__(message)


def _linear(state: dict, prefix: str) -> tuple[np.ndarray, np.ndarray]:
    """torch Linear stores weight as [out, in]; the graph multiplies x @ W."""
    weight = state[f"{prefix}.weight"].numpy().T.astype(np.float32).copy()
    bias = state[f"{prefix}.bias"].numpy().astype(np.float32).copy()
    return weight, bias


def build_graph(model: IntentEncoder) -> bytes:
    cfg = model.cfg
    state = {k: v.detach().cpu() for k, v in model.state_dict().items()}
    length, hidden, heads = cfg.max_length, cfg.hidden, cfg.heads
    head_dim = hidden // heads

    inits: list[bytes] = [
        wire.tensor("word_emb", state["word_emb.weight"].numpy().astype(np.float32)),
        wire.tensor("pos_emb", state["pos_emb"].numpy().astype(np.float32)),
        wire.tensor("one", np.float32(1.0).reshape(())),
        wire.tensor("neg_big", np.float32(-1e9).reshape(())),
        wire.tensor("att_scale", np.float32(head_dim ** -0.5).reshape(())),
        wire.tensor("split_shape", np.array([0, length, heads, head_dim], dtype=np.int64)),
        wire.tensor("merge_shape", np.array([0, length, hidden], dtype=np.int64)),
        wire.tensor("seq_axis", np.array([1], dtype=np.int64)),
        wire.tensor("mask_axes", np.array([1, 2], dtype=np.int64)),
        wire.tensor("feat_axis", np.array([2], dtype=np.int64)),
    ]
    nodes: list[bytes] = [
        wire.node("Cast", ["attention_mask"], ["maskf"], to=wire.FLOAT32),
        wire.node("Sub", ["one", "maskf"], ["mask_inv"]),
        wire.node("Mul", ["mask_inv", "neg_big"], ["mask_big"]),
        wire.node("Unsqueeze", ["mask_big", "mask_axes"], ["additive_mask"]),
        wire.node("Gather", ["word_emb", "input_ids"], ["emb"], axis=0),
        wire.node("Add", ["emb", "pos_emb"], ["x0"]),
    ]

    x = "x0"
    for i in range(cfg.layers):
        p = f"l{i}"
        for proj in ("q", "k", "v", "o"):
            w, b = _linear(state, f"blocks.{i}.{proj}")
            inits += [wire.tensor(f"{p}_{proj}_w", w), wire.tensor(f"{p}_{proj}_b", b)]
        for ln in ("ln1", "ln2"):
            inits += [
                wire.tensor(f"{p}_{ln}_g", state[f"blocks.{i}.{ln}.weight"].numpy().astype(np.float32)),
                wire.tensor(f"{p}_{ln}_b", state[f"blocks.{i}.{ln}.bias"].numpy().astype(np.float32)),
            ]
        for ff in ("ff1", "ff2"):
            w, b = _linear(state, f"blocks.{i}.{ff}")
            inits += [wire.tensor(f"{p}_{ff}_w", w), wire.tensor(f"{p}_{ff}_b", b)]

        for proj in ("q", "k", "v"):
            nodes += [
                wire.node("MatMul", [x, f"{p}_{proj}_w"], [f"{p}_{proj}_mm"]),
                wire.node("Add", [f"{p}_{proj}_mm", f"{p}_{proj}_b"], [f"{p}_{proj}_proj"]),
                wire.node("Reshape", [f"{p}_{proj}_proj", "split_shape"], [f"{p}_{proj}_r"]),
                wire.node("Transpose", [f"{p}_{proj}_r"], [f"{p}_{proj}_t"], perm=[0, 2, 1, 3]),
            ]
        nodes += [
            wire.node("Transpose", [f"{p}_k_t"], [f"{p}_k_tt"], perm=[0, 1, 3, 2]),
            wire.node("MatMul", [f"{p}_q_t", f"{p}_k_tt"], [f"{p}_att"]),
            wire.node("Mul", [f"{p}_att", "att_scale"], [f"{p}_att_s"]),
            wire.node("Add", [f"{p}_att_s", "additive_mask"], [f"{p}_att_m"]),
            wire.node("Softmax", [f"{p}_att_m"], [f"{p}_probs"], axis=-1),
            wire.node("MatMul", [f"{p}_probs", f"{p}_v_t"], [f"{p}_ctx"]),
            wire.node("Transpose", [f"{p}_ctx"], [f"{p}_ctx_t"], perm=[0, 2, 1, 3]),
            wire.node("Reshape", [f"{p}_ctx_t", "merge_shape"], [f"{p}_ctx_m"]),
            wire.node("MatMul", [f"{p}_ctx_m", f"{p}_o_w"], [f"{p}_o_mm"]),
            wire.node("Add", [f"{p}_o_mm", f"{p}_o_b"], [f"{p}_o_proj"]),
            wire.node("Add", [x, f"{p}_o_proj"], [f"{p}_res1"]),
            wire.node("LayerNormalization", [f"{p}_res1", f"{p}_ln1_g", f"{p}_ln1_b"],
                      [f"{p}_x1"], axis=-1, epsilon=1e-5),
            wire.node("MatMul", [f"{p}_x1", f"{p}_ff1_w"], [f"{p}_ff1_mm"]),
            wire.node("Add", [f"{p}_ff1_mm", f"{p}_ff1_b"], [f"{p}_ff1_o"]),
            wire.node("Relu", [f"{p}_ff1_o"], [f"{p}_ff_h"]),
            wire.node("MatMul", [f"{p}_ff_h", f"{p}_ff2_w"], [f"{p}_ff2_mm"]),
            wire.node("Add", [f"{p}_ff2_mm", f"{p}_ff2_b"], [f"{p}_ff_o"]),
            wire.node("Add", [f"{p}_x1", f"{p}_ff_o"], [f"{p}_res2"]),
            wire.node("LayerNormalization", [f"{p}_res2", f"{p}_ln2_g", f"{p}_ln2_b"],
                      [f"{p}_x2"], axis=-1, epsilon=1e-5),
        ]
        x = f"{p}_x2"

    head_w, head_b = _linear(state, "head")
    inits += [wire.tensor("head_w", head_w), wire.tensor("head_b", head_b)]
    nodes += [
        wire.node("Unsqueeze", ["maskf", "feat_axis"], ["mask3"]),
        wire.node("Mul", [x, "mask3"], ["x_masked"]),
        wire.node("ReduceSum", ["x_masked", "seq_axis"], ["x_sum"], keepdims=0),
        wire.node("ReduceSum", ["maskf", "seq_axis"], ["mask_sum"], keepdims=1),
        wire.node("Div", ["x_sum", "mask_sum"], ["pooled"]),
        wire.node("MatMul", ["pooled", "head_w"], ["head_mm"]),
        wire.node("Add", ["head_mm", "head_b"], ["logits"]),
    ]

    inputs = [
        wire.value_info("input_ids", wire.INT64, ["batch", length]),
        wire.value_info("attention_mask", wire.INT64, ["batch", length]),
    ]
    outputs = [wire.value_info("logits", wire.FLOAT32, ["batch", cfg.n_intents])]
    return wire.model(nodes, inputs, outputs, inits)


def export_bundle(ckpt_dir: str | Path, out_dir: str | Path) -> Path:
    """Emit the bundle and verify it reproduces native predictions."""
    model, tokenizer, config = load_checkpoint(ckpt_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    graph = build_graph(model)
    (out / "model.onnx").write_bytes(graph)
    shutil.copyfile(Path(ckpt_dir) / "tokenizer.json", out / "tokenizer.json")
    (out / "metadata.json").write_text(json.dumps({
        "intent_ids": config["intent_ids"],
        "thresholds": {i: 0.5 for i in config["intent_ids"]},
        "max_length": tokenizer.max_length,
        "best_step": config.get("best_step"),
    }, indent=1), encoding="utf-8")

    native, replayed = _verify(model, tokenizer, graph)
    worst = float(np.max(np.abs(native - replayed)))
    if worst > VERIFY_TOLERANCE:
        raise ExportError(
            f"bundle self-verification failed: worst |delta| {worst:.3e} exceeds {VERIFY_TOLERANCE}",
            worst_delta=worst,
        )
    (out / "fixture_predictions.json").write_text(json.dumps({
        "texts": FIXTURE_TEXTS,
        "intent_ids": config["intent_ids"],
        "scores": [[float(s) for s in row] for row in native],
        "worst_self_verify_delta": worst,
        "tolerance": VERIFY_TOLERANCE,
    }, indent=1), encoding="utf-8")
    return out


def _verify(model: IntentEncoder, tokenizer: WordVocabTokenizer,
            graph: bytes) -> tuple[np.ndarray, np.ndarray]:
    ids, mask = tokenizer.encode_batch(FIXTURE_TEXTS)
    native = model.predict_proba(torch.from_numpy(ids), torch.from_numpy(mask)).numpy()
    runtime = BundleRuntime(graph)
    logits = runtime.run({"input_ids": ids, "attention_mask": mask})["logits"]
    replayed = 1.0 / (1.0 + np.exp(-logits.astype(np.float64)))
    return native.astype(np.float64), replayed
