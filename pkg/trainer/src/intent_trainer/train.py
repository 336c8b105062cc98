"""Fine-tuning loop: BCE multi-label head, online window augmentation,
periodic validation, best-mean-F1 checkpoint selection.

Data order and augmentation draws come from the shared PCG32 streams
("batch-order" and "windows" substreams of the run seed), so a seed pins
the entire sample sequence; the sequence digest lands in the training log
for cross-run comparison.
"""

from __future__ import annotations

import hashlib
import json
import pickle
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import yaml
from torch import nn

from .data import (
    Conversation,
    WindowConfig,
    conversation_labels,
    or_labels,
    plan_batch_augmentation,
    read_corpus,
    render_input,
)
from .model import IntentEncoder, ModelConfig
from .rng import derive_stream
from .tokenizer import WordVocabTokenizer

DEFAULT_INTENTS = ["action-triggering", "information-seeking"]


@dataclass(frozen=True)
class FinetuneConfig:
    train_path: str
    val_path: str
    out_dir: str
    intent_ids: list[str] = field(default_factory=lambda: list(DEFAULT_INTENTS))
    model: ModelConfig = field(default_factory=ModelConfig)
    learning_rate: float = 2e-5
    batch_size: int = 24
    epochs: int = 5
    weight_decay: float = 1e-2
    eval_every: int = 500
    window: WindowConfig = field(default_factory=WindowConfig)
    seed: int = 0
    separator: str = "[SEP]"
    vocab_size: int = 2000

    @classmethod
    def from_yaml(cls, path: str | Path) -> "FinetuneConfig":
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        train_section = data.get("train", {})
        intent_ids = list(data.get("intents", DEFAULT_INTENTS))
        model_section = dict(data.get("model", {}))
        model_section["n_intents"] = len(intent_ids)
        vocab_size = int(model_section.get("vocab_size", 2000))
        return cls(
            train_path=data["data"]["train"],
            val_path=data["data"]["validation"],
            out_dir=data.get("out", "checkpoint"),
            intent_ids=intent_ids,
            model=ModelConfig.from_dict(model_section),
            learning_rate=float(train_section.get("learning_rate", 2e-5)),
            batch_size=int(train_section.get("batch_size", 24)),
            epochs=int(train_section.get("epochs", 5)),
            weight_decay=float(train_section.get("weight_decay", 1e-2)),
            eval_every=int(train_section.get("eval_every", 500)),
            window=WindowConfig.from_dict(data.get("window")),
            seed=int(train_section.get("seed", 0)),
            separator=train_section.get("separator", "[SEP]"),
            vocab_size=vocab_size,
        )


def _prf1(tp: int, fp: int, fn: int) -> dict[str, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def evaluate(model: IntentEncoder, tokenizer: WordVocabTokenizer, convs: list[Conversation],
             intent_ids: list[str], separator: str, batch_size: int = 64) -> dict:
    texts = [render_input(c, separator=separator) for c in convs]
    refs = np.array([[conversation_labels(c, intent_ids)[i] for i in intent_ids] for c in convs])
    preds = np.zeros_like(refs)
    for lo in range(0, len(texts), batch_size):
        ids, mask = tokenizer.encode_batch(texts[lo:lo + batch_size])
        probs = model.predict_proba(torch.from_numpy(ids), torch.from_numpy(mask)).numpy()
        preds[lo:lo + len(probs)] = (probs >= 0.5).astype(int)
    per_intent = {}
    for j, intent in enumerate(intent_ids):
        tp = int(((refs[:, j] == 1) & (preds[:, j] == 1)).sum())
        fp = int(((refs[:, j] == 0) & (preds[:, j] == 1)).sum())
        fn = int(((refs[:, j] == 1) & (preds[:, j] == 0)).sum())
        per_intent[intent] = _prf1(tp, fp, fn)
    mean_f1 = sum(m["f1"] for m in per_intent.values()) / len(per_intent)
    return {"per_intent": per_intent, "mean_f1": mean_f1}


def finetune(cfg: FinetuneConfig) -> Path:
    """Train and write a checkpoint directory; returns its path.

    The checkpoint holds the best-mean-F1 weights (ties to the later
    step), the tokenizer, the config, and the full training log.
    """
    train_convs = read_corpus(cfg.train_path)
    val_convs = read_corpus(cfg.val_path)
    if not train_convs or not val_convs:
        raise ValueError("empty train or validation corpus")
    for conv in train_convs:
        conversation_labels(conv, cfg.intent_ids)  # fail fast on schema mismatch

    texts = [render_input(c, separator=cfg.separator) for c in train_convs]
    tokenizer = WordVocabTokenizer.train(texts, vocab_size=cfg.vocab_size,
                                         max_length=cfg.model.max_length)

    torch.manual_seed(cfg.seed)
    model = IntentEncoder(cfg.model)
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate,
                                  weight_decay=cfg.weight_decay)
    loss_fn = nn.BCEWithLogitsLoss()

    order_rng = derive_stream(cfg.seed, "batch-order")
    aug_rng = derive_stream(cfg.seed, "windows")
    order_digest = hashlib.sha256()

    log: list[dict] = []
    best: tuple[float, int, dict] | None = None
    step = 0
    loss_acc, loss_n = 0.0, 0

    def snapshot(epoch: int):
        nonlocal best, loss_acc, loss_n
        metrics = evaluate(model, tokenizer, val_convs, cfg.intent_ids, cfg.separator)
        entry = {"step": step, "epoch": epoch,
                 "train_loss": (loss_acc / loss_n) if loss_n else None, **metrics}
        log.append(entry)
        loss_acc, loss_n = 0.0, 0
        if best is None or metrics["mean_f1"] >= best[0]:
            state = {k: v.detach().clone() for k, v in model.state_dict().items()}
            best = (metrics["mean_f1"], step, state)

    model.train()
    for epoch in range(cfg.epochs):
        order = list(range(len(train_convs)))
        order_rng.shuffle(order)
        for lo in range(0, len(order), cfg.batch_size):
            chunk = order[lo:lo + cfg.batch_size]
            batch_convs = [train_convs[i] for i in chunk]
            samples = [(render_input(c, separator=cfg.separator),
                        conversation_labels(c, cfg.intent_ids)) for c in batch_convs]
            augmentable = [c for c in batch_convs if all(t.labels is not None for t in c.turns)]
            for conv, start, end in plan_batch_augmentation(augmentable, cfg.window, aug_rng):
                samples.append((render_input(conv, start, end, cfg.separator),
                                or_labels(list(conv.turns[start:end]), cfg.intent_ids)))

            for i in chunk:
                order_digest.update(train_convs[i].id.encode())
            for text, _ in samples[len(chunk):]:
                order_digest.update(text.encode())

            ids, mask = tokenizer.encode_batch([s[0] for s in samples])
            targets = torch.tensor([[s[1][i] for i in cfg.intent_ids] for s in samples],
                                   dtype=torch.float32)
            optimizer.zero_grad()
            logits = model(torch.from_numpy(ids), torch.from_numpy(mask))
            loss = loss_fn(logits, targets)
            loss.backward()
            optimizer.step()
            loss_acc += float(loss.detach())
            loss_n += 1
            step += 1
            if step % cfg.eval_every == 0:
                snapshot(epoch)
                model.train()

    if not log or log[-1]["step"] != step:
        snapshot(cfg.epochs - 1)

    assert best is not None
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    torch.save(best[2], out / "weights.pt")
    tokenizer.save(out / "tokenizer.json")
    (out / "config.json").write_text(json.dumps({
        "model": cfg.model.to_dict(),
        "intent_ids": cfg.intent_ids,
        "separator": cfg.separator,
        "best_step": best[1],
        "seed": cfg.seed,
    }, indent=1), encoding="utf-8")
    (out / "training_log.json").write_text(json.dumps({
        "snapshots": log,
        "data_order_digest": order_digest.hexdigest(),
    }, indent=1), encoding="utf-8")
    return out


def load_checkpoint(ckpt_dir: str | Path) -> tuple[IntentEncoder, WordVocabTokenizer, dict]:
    ckpt_dir = Path(ckpt_dir)
    try:
        config = json.loads((ckpt_dir / "config.json").read_text(encoding="utf-8"))
        model = IntentEncoder(ModelConfig(**config["model"]))
        state = torch.load(ckpt_dir / "weights.pt", weights_only=True)
        model.load_state_dict(state)
    except (OSError, ValueError, KeyError, RuntimeError, pickle.UnpicklingError,
            json.JSONDecodeError) as exc:
        raise ValueError(f"cannot load checkpoint {ckpt_dir}: {exc}") from exc
    tokenizer = WordVocabTokenizer.load(ckpt_dir / "tokenizer.json")
    model.eval()
    return model, tokenizer, config
