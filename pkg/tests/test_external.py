import json

import numpy as np
import pytest

from convo_gate.classifier.onnx_proto import (
    decode_model,
    decode_tensor,
    encode_model,
    encode_node,
    encode_tensor,
    encode_value_info,
    FLOAT,
    INT64,
)
from convo_gate.classifier.onnx_rt import GraphRunner
from convo_gate.classifier.external import WordVocabTokenizer, load_external
from convo_gate.core import default_schema
from convo_gate.errors import BundleError, SchemaMismatchError

SCHEMA = default_schema()

TOKEN_PATTERN = r"[a-z0-9']+|[^a-z0-9'\s]"


def build_embedding_classifier(vocab_size=16, hidden=4, n_intents=2, max_len=6, seed=0):
    """Masked-mean embedding classifier emitted as ONNX bytes + numpy reference."""
    rng = np.random.default_rng(seed)
    emb = rng.normal(0, 1, (vocab_size, hidden)).astype(np.float32)
    w = rng.normal(0, 1, (hidden, n_intents)).astype(np.float32)
    b = rng.normal(0, 1, n_intents).astype(np.float32)

    nodes = [
        encode_node("Gather", ["emb", "input_ids"], ["x"], axis=0),
        encode_node("Cast", ["attention_mask"], ["maskf"], to=FLOAT),
        encode_node("Unsqueeze", ["maskf", "axes2"], ["masku"]),
        encode_node("Mul", ["x", "masku"], ["xm"]),
        encode_node("ReduceSum", ["xm", "axes1"], ["summed"], keepdims=0),
        encode_node("ReduceSum", ["maskf", "axes1"], ["count"], keepdims=1),
        encode_node("Div", ["summed", "count"], ["pooled"]),
        encode_node("MatMul", ["pooled", "w"], ["proj"]),
        encode_node("Add", ["proj", "b"], ["logits"]),
    ]
    initializers = [
        encode_tensor("emb", emb),
        encode_tensor("w", w),
        encode_tensor("b", b),
        encode_tensor("axes1", np.array([1], dtype=np.int64)),
        encode_tensor("axes2", np.array([2], dtype=np.int64)),
    ]
    inputs = [
        encode_value_info("input_ids", INT64, ["batch", max_len]),
        encode_value_info("attention_mask", INT64, ["batch", max_len]),
    ]
    outputs = [encode_value_info("logits", FLOAT, ["batch", n_intents])]
    model = encode_model(nodes, "toy-classifier", inputs, outputs, initializers)

    def reference(ids, mask):
        x = emb[ids]
        maskf = mask.astype(np.float32)
        pooled = (x * maskf[..., None]).sum(axis=1) / maskf.sum(axis=1, keepdims=True)
        return pooled @ w + b

    return model, reference


def write_bundle(path, model_bytes, vocab=None, intent_ids=None, max_len=6):
    path.mkdir(parents=True, exist_ok=True)
    vocab = vocab or {"[PAD]": 0, "[UNK]": 1, "remind": 2, "me": 3, "what": 4, "?": 5, "ok": 6}
    (path / "model.onnx").write_bytes(model_bytes)
    (path / "tokenizer.json").write_text(json.dumps({
        "kind": "word-vocab", "lowercase": True, "token_pattern": TOKEN_PATTERN,
        "vocab": vocab, "unk_token": "[UNK]", "pad_token": "[PAD]",
        "max_length": max_len, "truncation": "tail",
    }))
    (path / "metadata.json").write_text(json.dumps({
        "intent_ids": list(intent_ids or SCHEMA.ids),
        "thresholds": {i: 0.5 for i in (intent_ids or SCHEMA.ids)},
    }))
    return path


class TestProtoRoundTrip:
    def test_tensor_round_trip_float32(self):
        arr = np.arange(12, dtype=np.float32).reshape(3, 4)
        name, back = decode_tensor(encode_tensor("t", arr))
        assert name == "t"
        np.testing.assert_array_equal(back, arr)

    def test_tensor_round_trip_int64(self):
        arr = np.array([[-5, 0], [7, 2**40]], dtype=np.int64)
        _, back = decode_tensor(encode_tensor("t", arr))
        np.testing.assert_array_equal(back, arr)

    def test_model_round_trip_structure(self):
        model, _ = build_embedding_classifier()
        graph = decode_model(model)
        assert [n.op_type for n in graph.nodes][:2] == ["Gather", "Cast"]
        assert set(graph.initializers) == {"emb", "w", "b", "axes1", "axes2"}
        assert graph.input_names == ["input_ids", "attention_mask"]
        assert graph.output_names == ["logits"]
        assert graph.nodes[0].attrs["axis"] == 0
        assert graph.nodes[4].attrs["keepdims"] == 0

    def test_negative_int_attribute(self):
        node = encode_node("Softmax", ["x"], ["y"], axis=-1)
        graph = decode_model(encode_model([node], "g", [], [], []))
        assert graph.nodes[0].attrs["axis"] == -1


class TestGraphRunner:
    def test_matches_numpy_reference(self):
        model, reference = build_embedding_classifier()
        runner = GraphRunner(model)
        rng = np.random.default_rng(1)
        for _ in range(10):
            ids = rng.integers(0, 16, (2, 6)).astype(np.int64)
            mask = np.ones((2, 6), dtype=np.int64)
            mask[:, rng.integers(1, 6):] = 0
            out = runner.run({"input_ids": ids, "attention_mask": mask})["logits"]
            np.testing.assert_allclose(out, reference(ids, mask), rtol=1e-5, atol=1e-6)

    def test_unsupported_op_rejected(self):
        node = encode_node("FancyCustomOp", ["x"], ["y"])
        model = encode_model([node], "g", [encode_value_info("x", FLOAT, [1])],
                             [encode_value_info("y", FLOAT, [1])], [])
        with pytest.raises(BundleError, match="unsupported ops"):
            GraphRunner(model)

    def test_missing_feed_rejected(self):
        model, _ = build_embedding_classifier()
        runner = GraphRunner(model)
        with pytest.raises(BundleError, match="missing graph inputs"):
            runner.run({"input_ids": np.zeros((1, 6), dtype=np.int64)})

    def test_layer_norm_matches_torch_semantics(self):
        x = np.random.default_rng(2).normal(0, 2, (2, 3, 8)).astype(np.float32)
        scale = np.linspace(0.5, 1.5, 8).astype(np.float32)
        bias = np.linspace(-1, 1, 8).astype(np.float32)
        nodes = [encode_node("LayerNormalization", ["x", "scale", "bias"], ["y"], axis=-1, epsilon=1e-5)]
        model = encode_model(nodes, "ln", [encode_value_info("x", FLOAT, [2, 3, 8])],
                             [encode_value_info("y", FLOAT, [2, 3, 8])],
                             [encode_tensor("scale", scale), encode_tensor("bias", bias)])
        out = GraphRunner(model).run({"x": x})["y"]
        mean = x.mean(-1, keepdims=True)
        var = x.var(-1, keepdims=True)
        expected = (x - mean) / np.sqrt(var + 1e-5) * scale + bias
        np.testing.assert_allclose(out, expected, rtol=1e-5, atol=1e-6)

    def test_softmax_reshape_transpose(self):
        x = np.random.default_rng(3).normal(0, 1, (2, 12)).astype(np.float32)
        nodes = [
            encode_node("Reshape", ["x", "shape"], ["r"]),
            encode_node("Transpose", ["r"], ["t"], perm=[0, 2, 1]),
            encode_node("Softmax", ["t"], ["y"], axis=-1),
        ]
        model = encode_model(nodes, "g", [encode_value_info("x", FLOAT, [2, 12])],
                             [encode_value_info("y", FLOAT, [2, 4, 3])],
                             [encode_tensor("shape", np.array([0, 3, 4], dtype=np.int64))])
        out = GraphRunner(model).run({"x": x})["y"]
        expected = x.reshape(2, 3, 4).transpose(0, 2, 1)
        expected = np.exp(expected - expected.max(-1, keepdims=True))
        expected /= expected.sum(-1, keepdims=True)
        np.testing.assert_allclose(out, expected, rtol=1e-5, atol=1e-7)


class TestTokenizer:
    def make(self, max_len=6):
        return WordVocabTokenizer({
            "kind": "word-vocab", "lowercase": True, "token_pattern": TOKEN_PATTERN,
            "vocab": {"[PAD]": 0, "[UNK]": 1, "remind": 2, "me": 3, "what": 4, "?": 5},
            "unk_token": "[UNK]", "pad_token": "[PAD]", "max_length": max_len,
        })

    def test_encode_pads_and_masks(self):
        ids, mask = self.make().encode("Remind me")
        np.testing.assert_array_equal(ids, [2, 3, 0, 0, 0, 0])
        np.testing.assert_array_equal(mask, [1, 1, 0, 0, 0, 0])

    def test_unknown_tokens_map_to_unk(self):
        ids, _ = self.make().encode("remind zebra")
        assert ids[1] == 1

    def test_truncates_tail(self):
        ids, mask = self.make(max_len=2).encode("remind me what ?")
        np.testing.assert_array_equal(ids, [2, 3])
        np.testing.assert_array_equal(mask, [1, 1])

    def test_empty_text_encodes_one_unk(self):
        ids, mask = self.make().encode("")
        assert ids[0] == 1 and mask[0] == 1 and mask[1:].sum() == 0

    def test_count_tokens_ignores_truncation(self):
        tok = self.make(max_len=2)
        assert tok.count_tokens("remind me what ?") == 4


class TestLoadExternal:
    def test_load_and_predict(self, tmp_path):
        model, reference = build_embedding_classifier()
        bundle = write_bundle(tmp_path / "bundle", model)
        clf = load_external(bundle, SCHEMA)
        scores = clf.predict("remind me ?")
        assert len(scores) == 2
        ids = np.array([[2, 3, 5, 0, 0, 0]], dtype=np.int64)
        mask = np.array([[1, 1, 1, 0, 0, 0]], dtype=np.int64)
        expected = 1 / (1 + np.exp(-reference(ids, mask)[0]))
        np.testing.assert_allclose(scores.values, expected, rtol=1e-5, atol=1e-6)

    def test_wrong_intent_order_rejected(self, tmp_path):
        model, _ = build_embedding_classifier()
        bundle = write_bundle(tmp_path / "bundle", model,
                              intent_ids=["information-seeking", "action-triggering"])
        with pytest.raises(SchemaMismatchError, match="intent order"):
            load_external(bundle, SCHEMA)

    def test_nonexistent_path_is_io_error(self):
        with pytest.raises(FileNotFoundError):
            load_external("/no/such/bundle", SCHEMA)

    def test_missing_file_rejected(self, tmp_path):
        model, _ = build_embedding_classifier()
        bundle = write_bundle(tmp_path / "bundle", model)
        (bundle / "tokenizer.json").unlink()
        with pytest.raises(BundleError, match="missing tokenizer.json"):
            load_external(bundle, SCHEMA)

    def test_corrupt_metadata_rejected(self, tmp_path):
        model, _ = build_embedding_classifier()
        bundle = write_bundle(tmp_path / "bundle", model)
        (bundle / "metadata.json").write_text("{broken")
        with pytest.raises(BundleError, match="corrupt"):
            load_external(bundle, SCHEMA)

    def test_load_model_dispatches_to_directory(self, tmp_path):
        from convo_gate.classifier import load_model

        model, _ = build_embedding_classifier()
        bundle = write_bundle(tmp_path / "bundle", model)
        clf = load_model(bundle, SCHEMA)
        assert clf.backend_kind == "external"
        assert clf.count_tokens("remind me now") == 3
