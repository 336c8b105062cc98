"""intent-trainer: fine-tune compact multi-label intent classifiers.

Consumes the gateway toolkit's serialized corpora (conversation line
format) and run configuration, trains a small transformer encoder with
the reference recipe (BCE multi-label loss, online rolling-window
augmentation, periodic validation, best-mean-F1 checkpoint), and exports
self-verified ONNX bundles the toolkit loads through ``load_external``.
"""

from .data import Conversation, Turn, WindowConfig, conversation_labels, or_labels, read_corpus, render_input
from .export import ExportError, export_bundle
from .model import IntentEncoder, ModelConfig
from .rng import Pcg32, derive_stream
from .tokenizer import WordVocabTokenizer
from .train import FinetuneConfig, evaluate, finetune, load_checkpoint

__version__ = "0.1.0"
