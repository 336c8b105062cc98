"""Compact transformer encoder with a sigmoid multi-label head.

A small MobileBERT-class encoder: token + position embeddings, post-LN
self-attention blocks with ReLU feed-forwards, masked mean pooling, and a
linear head producing one logit per intent.  The forward pass is written
op-for-op the way the ONNX exporter emits it, so exported bundles
reproduce native predictions to float32 precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int = 2000
    max_length: int = 64
    hidden: int = 64
    heads: int = 2
    layers: int = 2
    ff: int = 128
    n_intents: int = 2

    def __post_init__(self):
        if self.hidden % self.heads:
            raise ValueError("hidden must be divisible by heads")

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        preset = dict(_PRESETS.get(data.get("preset", "tiny"), {}))
        preset.update({k: v for k, v in data.items() if k != "preset"})
        return cls(**preset)

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size, "max_length": self.max_length,
            "hidden": self.hidden, "heads": self.heads, "layers": self.layers,
            "ff": self.ff, "n_intents": self.n_intents,
        }


_PRESETS = {
    "tiny": dict(vocab_size=2000, max_length=64, hidden=64, heads=2, layers=2, ff=128),
    "small": dict(vocab_size=8000, max_length=128, hidden=128, heads=4, layers=4, ff=256),
}


class EncoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.heads = cfg.heads
        self.head_dim = cfg.hidden // cfg.heads
        self.q = nn.Linear(cfg.hidden, cfg.hidden)
        self.k = nn.Linear(cfg.hidden, cfg.hidden)
        self.v = nn.Linear(cfg.hidden, cfg.hidden)
        self.o = nn.Linear(cfg.hidden, cfg.hidden)
        self.ln1 = nn.LayerNorm(cfg.hidden)
        self.ff1 = nn.Linear(cfg.hidden, cfg.ff)
        self.ff2 = nn.Linear(cfg.ff, cfg.hidden)
        self.ln2 = nn.LayerNorm(cfg.hidden)

    def forward(self, x: torch.Tensor, additive_mask: torch.Tensor) -> torch.Tensor:
        batch, length, hidden = x.shape

        def split(t):
            return t.view(batch, length, self.heads, self.head_dim).transpose(1, 2)

        q, k, v = split(self.q(x)), split(self.k(x)), split(self.v(x))
        scores = q @ k.transpose(-1, -2) * (self.head_dim ** -0.5) + additive_mask
        probs = torch.softmax(scores, dim=-1)
        ctx = (probs @ v).transpose(1, 2).reshape(batch, length, hidden)
        x = self.ln1(x + self.o(ctx))
        x = self.ln2(x + self.ff2(torch.relu(self.ff1(x))))
        return x


class IntentEncoder(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.word_emb = nn.Embedding(cfg.vocab_size, cfg.hidden)
        self.pos_emb = nn.Parameter(torch.zeros(1, cfg.max_length, cfg.hidden))
        nn.init.normal_(self.pos_emb, std=0.02)
        self.blocks = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.layers))
        self.head = nn.Linear(cfg.hidden, cfg.n_intents)

    def forward(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        maskf = attention_mask.to(torch.float32)
        additive = (1.0 - maskf)[:, None, None, :] * -1e9
        x = self.word_emb(input_ids) + self.pos_emb
        for block in self.blocks:
            x = block(x, additive)
        pooled = (x * maskf[:, :, None]).sum(dim=1) / maskf.sum(dim=1, keepdim=True)
        return self.head(pooled)

    @torch.no_grad()
    def predict_proba(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        self.eval()
        return torch.sigmoid(self(input_ids, attention_mask))
