import pytest

from intent_trainer.data import (
    Conversation,
    Turn,
    WindowConfig,
    conversation_labels,
    or_labels,
    read_corpus,
    render_input,
    sample_windows,
)
from intent_trainer.rng import Pcg32, derive_stream
from intent_trainer.tokenizer import WordVocabTokenizer

from conftest import INTENTS

REFERENCE_42_54 = [0xA15C02B7, 0x7B47F409, 0xBA1D3330, 0x83D2F293, 0xBFA4784B, 0xCBED606E]


def conv(*turn_labels):
    turns = tuple(
        Turn(f"s{i}", f"text number {i}", labels={"action-triggering": a, "information-seeking": b})
        for i, (a, b) in enumerate(turn_labels)
    )
    return Conversation("c1", turns, labels=None)


class TestRng:
    def test_reference_vectors(self):
        rng = Pcg32(42, 54)
        assert [rng.next_u32() for _ in range(6)] == REFERENCE_42_54

    def test_derive_stream_reproducible(self):
        a = derive_stream(3, "windows")
        b = derive_stream(3, "windows")
        assert [a.next_u32() for _ in range(8)] == [b.next_u32() for _ in range(8)]


class TestLabels:
    def test_or_rule(self):
        c = conv((1, 0), (0, 0), (0, 1))
        assert or_labels(list(c.turns), INTENTS) == {"action-triggering": 1, "information-seeking": 1}

    def test_all_negative(self):
        c = conv((0, 0), (0, 0))
        assert or_labels(list(c.turns), INTENTS) == {"action-triggering": 0, "information-seeking": 0}

    def test_conversation_labels_prefers_turn_derivation(self):
        c = conv((1, 0))
        assert conversation_labels(c, INTENTS)["action-triggering"] == 1

    def test_unlabeled_rejected(self):
        c = Conversation("x", (Turn("s", "hi", None),), None)
        with pytest.raises(ValueError, match="no usable labels"):
            conversation_labels(c, INTENTS)


class TestRender:
    def test_speakers_dropped_and_sep_joined(self):
        c = conv((0, 0), (0, 0))
        assert render_input(c) == "text number 0 [SEP] text number 1"
        assert "s0" not in render_input(c)

    def test_range_rendering(self):
        c = conv((0, 0), (0, 0), (0, 0))
        assert render_input(c, 1, 3, "<s>") == "text number 1 <s> text number 2"


class TestWindows:
    def test_bounds(self):
        c = conv(*([(0, 0)] * 10))
        cfg = WindowConfig(min_turns=1, max_turns=5, max_segments_per_conversation=2)
        for start, end in sample_windows(c, cfg, Pcg32(3)):
            assert 1 <= end - start <= 5
            assert 0 <= start < end <= 10

    def test_too_short_returns_nothing(self):
        c = conv((0, 0), (0, 0))
        cfg = WindowConfig(min_turns=3, max_turns=5)
        assert sample_windows(c, cfg, Pcg32(0)) == []

    def test_deterministic(self):
        c = conv(*([(0, 0)] * 8))
        cfg = WindowConfig()
        assert sample_windows(c, cfg, Pcg32(9)) == sample_windows(c, cfg, Pcg32(9))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            WindowConfig(min_turns=0)
        with pytest.raises(ValueError):
            WindowConfig(batch_probability=2.0)


class TestCorpusReading:
    def test_reads_golden(self, golden_corpus):
        assert len(golden_corpus) >= 200
        assert all(c.turns for c in golden_corpus)

    def test_malformed_line_reports_location(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a"}\n', encoding="utf-8")
        with pytest.raises(ValueError, match="bad.jsonl:1"):
            read_corpus(path)


class TestTokenizer:
    def test_round_trip(self, tmp_path):
        tok = WordVocabTokenizer.train(["remind me now", "what is this?"], vocab_size=32, max_length=8)
        tok.save(tmp_path / "tokenizer.json")
        back = WordVocabTokenizer.load(tmp_path / "tokenizer.json")
        import numpy as np

        ids_a, mask_a = tok.encode("remind me what?")
        ids_b, mask_b = back.encode("remind me what?")
        np.testing.assert_array_equal(ids_a, ids_b)
        np.testing.assert_array_equal(mask_a, mask_b)

    def test_pad_and_unk_reserved(self):
        tok = WordVocabTokenizer.train(["a b c"], vocab_size=16, max_length=4)
        assert tok.vocab["[PAD]"] == 0
        assert tok.vocab["[UNK]"] == 1

    def test_deterministic_vocab_order(self):
        texts = ["b a", "a c", "c b a"]
        a = WordVocabTokenizer.train(texts, vocab_size=8, max_length=4).vocab
        b = WordVocabTokenizer.train(list(texts), vocab_size=8, max_length=4).vocab
        assert a == b

    def test_empty_text_encodes_unk(self):
        tok = WordVocabTokenizer.train(["a"], vocab_size=8, max_length=4)
        ids, mask = tok.encode("")
        assert ids[0] == tok.unk_id and mask[0] == 1
