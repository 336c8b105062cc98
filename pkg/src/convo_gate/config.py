"""Run configuration files (YAML).

One file can carry any of the sections; each CLI command reads the parts
it needs:

    schema:                    # or the string "default"
      intents: [{id, definition, positive_examples, ...}]
    window:
      min_turns: 1
      max_turns: 5
      max_segments_per_conversation: 2
      batch_probability: 0.5
      seed: 0
    train:
      learning_rate: 0.1
      batch_size: 24
      epochs: 5
      l2: 0.01
      eval_every: 500
      seed: 0
    gateway:
      model_path: models/baseline.cgbl
      predicate: any
      listen_addr: 127.0.0.1:8470
      downstream_url: null
      downstream_timeout: 10.0
      counter: whitespace
      context_budget: null
      fail_open: false
      audit_log: gateway-audit.jsonl
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .augment import WindowConfig
from .core import IntentSchema, default_schema, schema_from_dict


def load_yaml(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return yaml.safe_load(fh) or {}


def schema_from_config(data: dict | str | None) -> IntentSchema:
    if data is None or data == "default":
        return default_schema()
    if isinstance(data, str):
        return schema_from_dict(load_yaml(data))
    return schema_from_dict(data)


def load_schema(path: str | Path | None) -> IntentSchema:
    """Schema from a YAML file, or the built-in default when path is None/"default"."""
    if path in (None, "default"):
        return default_schema()
    return schema_from_dict(load_yaml(path))


def window_config_from_dict(data: dict | None) -> WindowConfig:
    data = data or {}
    return WindowConfig(
        min_turns=int(data.get("min_turns", 1)),
        max_turns=int(data.get("max_turns", 5)),
        max_segments_per_conversation=int(data.get("max_segments_per_conversation", 2)),
        batch_probability=float(data.get("batch_probability", 0.5)),
        seed=int(data.get("seed", 0)),
    )


def window_config_to_dict(cfg: WindowConfig) -> dict:
    return {
        "min_turns": cfg.min_turns,
        "max_turns": cfg.max_turns,
        "max_segments_per_conversation": cfg.max_segments_per_conversation,
        "batch_probability": cfg.batch_probability,
        "seed": cfg.seed,
    }


@dataclass(frozen=True)
class GatewayConfig:
    """Filtering service settings; the predicate must name a schema intent or "any"."""

    model_path: str
    predicate: str = "any"
    listen_addr: str = "127.0.0.1:8470"
    downstream_url: str | None = None
    downstream_timeout: float = 10.0
    counter: str = "whitespace"
    context_budget: int | None = None
    thresholds: dict[str, float] | None = None
    fail_open: bool = False
    audit_log: str | None = None
    separator: str = "[SEP]"

    def host_port(self) -> tuple[str, int]:
        host, _, port = self.listen_addr.rpartition(":")
        return host or "127.0.0.1", int(port)


def gateway_config_from_dict(data: dict) -> GatewayConfig:
    return GatewayConfig(
        model_path=data["model_path"],
        predicate=data.get("predicate", "any"),
        listen_addr=data.get("listen_addr", "127.0.0.1:8470"),
        downstream_url=data.get("downstream_url"),
        downstream_timeout=float(data.get("downstream_timeout", 10.0)),
        counter=data.get("counter", "whitespace"),
        context_budget=data.get("context_budget"),
        thresholds=data.get("thresholds"),
        fail_open=bool(data.get("fail_open", False)),
        audit_log=data.get("audit_log"),
        separator=data.get("separator", "[SEP]"),
    )
