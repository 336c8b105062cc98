"""Desk-scale distillation: generate, label, train, evaluate.

The mock teacher answers the real prompt templates with deterministic
keyword-rule labels, so the entire pipeline runs offline in seconds:
synthetic generation -> turn labeling -> baseline training -> metrics.
Swap MockTeacher for HttpTeacher(TeacherConfig(...)) to distill from a
real provider.
"""

from convo_gate import (
    MockTeacher,
    TrainConfig,
    WindowConfig,
    conversation_label,
    decide,
    default_schema,
    generate_from_seeds,
    label_corpus,
    prf1,
    render_model_input,
    train_baseline,
)

schema = default_schema()
teacher = MockTeacher()

# Seeds drive generation; each becomes a small multi-party conversation.
tasks = ("call mom", "send the invoice", "water the plants", "renew the passport",
         "sign the lease", "back up the laptop", "submit the report", "close the ticket")
whens = ("tomorrow", "tonight", "on friday", "next week", "at noon", "before lunch")
topics = ("the capital of peru", "a sourdough starter", "the metro timetable",
          "an espresso ratio", "rust lifetimes", "tide patterns", "cloud cover", "old films")
activities = ("bake bread", "grow basil", "fold origami", "brew kombucha",
              "patch the kernel", "tune the antenna")
action_seeds = [f"remind me to {task} {when}" for task in tasks for when in whens]
info_seeds = [f"what is {topic}" for topic in topics]
info_seeds += [f"how do i {activity} {when}" for activity in activities for when in whens]
chitchat_seeds = [f"the commute was rough today ({i})" for i in range(44)]

convs = []
convs += generate_from_seeds(action_seeds, "action-triggering", teacher, source_dataset="demo-action")
convs += generate_from_seeds(info_seeds, "information-seeking", teacher, source_dataset="demo-info")
convs += generate_from_seeds(chitchat_seeds, "general chit-chat", teacher, source_dataset="demo-chitchat")
print(f"generated {len(convs)} conversations")

# Turn-level labeling runs one teacher request per intent per conversation.
labeled = list(label_corpus(convs, schema, teacher))
positives = sum(conversation_label(c).values[0] for c in labeled)
print(f"labeled: {positives} action-positive of {len(labeled)}")

# Train/evaluate split, then the standard recipe (more epochs to make up
# for the miniature corpus).
train, heldout = labeled[::2], labeled[1::2]
cfg = TrainConfig(
    learning_rate=0.1, batch_size=24, epochs=40, eval_every=500,
    window=WindowConfig(min_turns=1, max_turns=5, max_segments_per_conversation=2,
                        batch_probability=0.5),
    seed=0,
)
model, log = train_baseline(train, heldout, schema, cfg)
print(f"trained for {log[-1].step} steps; best checkpoint at step {model.metadata['steps']}")

references = [conversation_label(c) for c in heldout]
predictions = [decide(model.predict(render_model_input(c)), model.thresholds) for c in heldout]
for intent in schema.ids:
    m = prf1(references, predictions, schema, intent)
    print(f"{intent}: P={m.precision:.3f} R={m.recall:.3f} F1={m.f1:.3f}")
