"""Rolling-window augmentation and context-budget segmentation.

Window sampling draws up to x random, possibly overlapping turn windows
per conversation as extra training samples; budget splitting partitions a
long conversation so every rendered piece fits a model's context window.
"""

from convo_gate import (
    MockTeacher,
    WindowConfig,
    default_schema,
    label_conversation,
    generate_persona_conversation,
    render_model_input,
    sample_windows,
    plan_batch_augmentation,
    split_to_context_budget,
    whitespace_counter,
)
from convo_gate.rng import Pcg32, derive_stream

schema = default_schema()
conv = label_conversation(
    generate_persona_conversation(3, "weekend hikes", MockTeacher(), conv_id="demo-persona"),
    schema, MockTeacher(),
)
print(f"conversation has {len(conv.turns)} turns\n")

# Up to two windows of one to five turns, uniform length and position.
cfg = WindowConfig(min_turns=1, max_turns=5, max_segments_per_conversation=2,
                   batch_probability=0.5, seed=42)
rng = derive_stream(cfg.seed, conv.id)  # one substream per conversation
for seg in sample_windows(conv, cfg, rng):
    text = render_model_input(conv, seg.start_turn, seg.end_turn)
    print(f"window [{seg.start_turn},{seg.end_turn}) labels={seg.labels.values}: {text[:70]}")

# Batch-level application: one coin flip per batch at the configured rate.
batch = [conv]
augmented_batches = sum(
    bool(plan_batch_augmentation(batch, cfg, Pcg32(i))) for i in range(1000)
)
print(f"\n~{augmented_batches / 10:.1f}% of 1000 batches got augmented (p=0.5)")

# Budget splitting: a partition, never a sample.
for seg in split_to_context_budget(conv, budget=12, counter=whitespace_counter, separator="[SEP]"):
    flag = " (over budget)" if seg.over_budget else ""
    print(f"chunk [{seg.start_turn},{seg.end_turn}){flag}")
