"""Example converter: a DailyDialog-style dump into the corpus line format.

Documentation only, not API surface: every public corpus has its own
native format, and each needs a dozen lines like these. The source here
is the common "one dialogue per line, turns separated by __eou__" text
layout; speakers alternate and are unnamed.

Usage: python demos/convert_public_corpus.py dialogues.txt out.jsonl
"""

import sys

from convo_gate import Conversation, Turn, default_schema
from convo_gate.corpus import write_corpus


def convert(src_path: str, out_path: str) -> int:
    schema = default_schema()
    conversations = []
    with open(src_path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            texts = [t.strip() for t in line.split("__eou__")]
            texts = [t for t in texts if t]  # drop empty/whitespace-only turns
            if not texts:
                continue
            conversations.append(Conversation(
                id=f"dailydialog-{i:06d}",
                source_dataset="dailydialog",
                turns=tuple(
                    Turn(speaker=f"speaker-{j % 2}", text=text)
                    for j, text in enumerate(texts)
                ),
            ))
    return write_corpus(conversations, out_path, schema)


if __name__ == "__main__":
    if len(sys.argv) != 3:
        raise SystemExit(__doc__)
    n = convert(sys.argv[1], sys.argv[2])
    print(f"wrote {n} conversations to {sys.argv[2]}")
