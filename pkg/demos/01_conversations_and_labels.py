"""Conversations, intent labels, and the OR algebra.

A conversation is an ordered list of speaker turns. Labels are binary
per-intent vectors; a segment or conversation is positive for an intent
as soon as any covered turn is.
"""

from convo_gate import (
    Conversation,
    IntentVector,
    Segment,
    Turn,
    aggregate_labels,
    default_schema,
    render_model_input,
    segment_labels,
)

schema = default_schema()
print("intents:", schema.ids)

# Three turns: a request, an acknowledgement, and a question.
conv = Conversation(
    id="demo-1",
    source_dataset="demo",
    turns=(
        Turn("Ann", "please remind me to send the slides", labels=IntentVector((1, 0))),
        Turn("Bo", "will do", labels=IntentVector((0, 0))),
        Turn("Ann", "what time is the review again?", labels=IntentVector((0, 1))),
    ),
)

# Conversation-level labels are the OR over turn labels.
labels = aggregate_labels([t.labels for t in conv.turns])
print("conversation labels:", labels.to_mapping(schema))

# Any contiguous segment aggregates the same way.
head = Segment(conv.id, 0, 2)
print("segment [0,2) labels:", segment_labels(conv, head).to_mapping(schema))

# Model input drops speakers and joins turns with the separator token.
print("model input:", render_model_input(conv, separator="[SEP]"))
