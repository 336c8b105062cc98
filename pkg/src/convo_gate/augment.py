"""Rolling-window segment sampling and context-budget segmentation.

Window sampling is an online augmentation: segments are drawn fresh from
explicit rng state each time a batch is built and are never persisted into
the base corpus.  Budget splitting packs consecutive turns greedily so each
rendered segment stays inside a model's context window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .core import Conversation, IntentVector, Segment, aggregate_labels, render_model_input
from .errors import UnlabeledError
from .rng import Pcg32

TokenCounter = Callable[[str], int]


@dataclass(frozen=True)
class WindowConfig:
    """Rolling-window parameters.

    Defaults: windows of one to five turns, up to two extra segments per
    conversation, applied to half of the training batches.
    """

    min_turns: int = 1
    max_turns: int = 5
    max_segments_per_conversation: int = 2
    batch_probability: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.min_turns <= self.max_turns):
            raise ValueError(f"need 1 <= min_turns <= max_turns, got {self.min_turns}..{self.max_turns}")
        if self.max_segments_per_conversation < 0:
            raise ValueError("max_segments_per_conversation must be >= 0")
        if not (0.0 <= self.batch_probability <= 1.0):
            raise ValueError("batch_probability must lie in [0, 1]")


def sample_windows(conv: Conversation, cfg: WindowConfig, rng: Pcg32) -> list[Segment]:
    """Up to ``max_segments_per_conversation`` random turn windows.

    Each window's length is uniform over [min_turns, min(max_turns,
    turn_count)] and its start uniform over the feasible positions, so
    windows may overlap.  Draws that repeat an earlier (start, length) pair
    are dropped, which is what makes the count "up to" the maximum.
    Conversations shorter than ``min_turns`` yield nothing.
    """
    n = len(conv.turns)
    if n < cfg.min_turns:
        return []
    if not conv.fully_turn_labeled:
        raise UnlabeledError(f"conversation {conv.id!r} must be fully turn-labeled for window sampling")
    hi = min(cfg.max_turns, n)
    seen: set[tuple[int, int]] = set()
    segments: list[Segment] = []
    for _ in range(cfg.max_segments_per_conversation):
        length = rng.randint(cfg.min_turns, hi)
        start = rng.randint(0, n - length)
        if (start, length) in seen:
            continue
        seen.add((start, length))
        labels = aggregate_labels([t.labels for t in conv.turns[start:start + length]])
        segments.append(Segment(conv.id, start, start + length, labels=labels))
    return segments


def plan_batch_augmentation(batch: Sequence[Conversation], cfg: WindowConfig, rng: Pcg32) -> list[Segment]:
    """Window samples for one batch, applied with the batch probability.

    A single draw decides whether this batch is augmented at all; if it is,
    every conversation contributes its window samples in batch order.
    Augmented segments supplement the batch, they never replace members.
    """
    if rng.uniform() >= cfg.batch_probability:
        return []
    segments: list[Segment] = []
    for conv in batch:
        segments.extend(sample_windows(conv, cfg, rng))
    return segments


def split_to_context_budget(conv: Conversation, budget: int, counter: TokenCounter,
                            separator: str) -> list[Segment]:
    """Greedy left-to-right packing of turns under a rendered-token budget.

    The result is a partition: disjoint, contiguous, order-preserving, and
    covering every turn.  A single turn that alone exceeds the budget
    becomes its own segment flagged ``over_budget`` rather than being
    silently truncated.  Labels are aggregated when the covered turns carry
    them, left None otherwise.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    n = len(conv.turns)
    segments: list[Segment] = []
    start = 0
    while start < n:
        end = start + 1
        cost = counter(render_model_input(conv, start, end, separator))
        if cost > budget:
            segments.append(_make_segment(conv, start, end, over_budget=True))
            start = end
            continue
        while end < n:
            next_cost = counter(render_model_input(conv, start, end + 1, separator))
            if next_cost > budget:
                break
            end += 1
        segments.append(_make_segment(conv, start, end))
        start = end
    return segments


def _make_segment(conv: Conversation, start: int, end: int, over_budget: bool = False) -> Segment:
    turn_labels = [t.labels for t in conv.turns[start:end]]
    labels: IntentVector | None = None
    if all(l is not None for l in turn_labels):
        labels = aggregate_labels([l for l in turn_labels if l is not None])
    return Segment(conv.id, start, end, labels=labels, over_budget=over_budget)
