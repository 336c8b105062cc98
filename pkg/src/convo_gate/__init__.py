"""convo-gate: intent-based filtering for multi-party conversations.

Distills an LLM teacher's conversational-intent judgments into a compact
multi-label classifier, then uses it to forward only intent-relevant
conversation snippets to a downstream LLM, with full token-reduction
accounting along the way.
"""

from .augment import WindowConfig, plan_batch_augmentation, sample_windows, split_to_context_budget
from .classifier import (
    BaselineClassifier,
    ExternalClassifier,
    TrainConfig,
    decide,
    gradient_check,
    load_external,
    load_model,
    train_baseline,
)
from .core import (
    Conversation,
    IntentDescriptor,
    IntentSchema,
    IntentVector,
    Segment,
    Turn,
    aggregate_labels,
    conversation_label,
    default_schema,
    render_model_input,
    segment_labels,
    with_labels,
)
from .corpus import (
    CorpusManifest,
    DatasetStats,
    compute_stats,
    load_manifest,
    read_corpus,
    sample_balanced,
    write_corpus,
)
from .evaluation import (
    PRF1,
    ReductionReport,
    actual_reduction,
    build_report,
    conversation_tokens,
    expected_reduction,
    make_counter,
    prf1,
    whitespace_counter,
)
from .gateway import FilterDecision, GatewayService, GatewayStats, create_app, verify_audit_log
from .mock_teacher import MockTeacher, mock_label
from .rng import Pcg32, derive_stream
from .teacher import (
    HttpTeacher,
    TeacherConfig,
    TurnAnnotation,
    generate_from_seeds,
    generate_persona_conversation,
    label_conversation,
    label_corpus,
    label_turns,
    parse_teacher_response,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
