"""Numpy evaluation of exported graphs, for export-time self-verification.

Covers exactly the ops the exporter emits; anything else is a loud error
so drift between exporter and verifier cannot pass silently.
"""

from __future__ import annotations

import numpy as np

from .onnx_wire import WireGraph, WireNode, parse

_CAST = {1: np.float32, 6: np.int32, 7: np.int64, 9: np.bool_, 11: np.float64}


def _reshape(node: WireNode, x, shape):
    target = []
    for i, dim in enumerate(np.asarray(shape).ravel()):
        target.append(int(x.shape[i]) if dim == 0 else int(dim))
    return x.reshape(target)


def _softmax(node: WireNode, x):
    axis = int(node.attrs.get("axis", -1))
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _layer_norm(node: WireNode, x, scale, bias=None):
    axis = int(node.attrs.get("axis", -1)) % x.ndim
    epsilon = float(node.attrs.get("epsilon", 1e-5))
    axes = tuple(range(axis, x.ndim))
    mean = x.mean(axis=axes, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=axes, keepdims=True)
    out = (x - mean) / np.sqrt(var + epsilon) * scale
    return (out + bias if bias is not None else out).astype(x.dtype, copy=False)


def _reduce_sum(node: WireNode, x, axes=None):
    axis = tuple(int(a) for a in np.asarray(axes).ravel()) if axes is not None else None
    return x.sum(axis=axis, keepdims=bool(node.attrs.get("keepdims", 1)))


def _unsqueeze(node: WireNode, x, axes=None):
    axis_list = (list(np.asarray(axes).ravel()) if axes is not None
                 else list(node.attrs.get("axes", [])))
    out = x
    for a in sorted(int(a) % (x.ndim + len(axis_list)) for a in axis_list):
        out = np.expand_dims(out, a)
    return out


_OPS = {
    "Gather": lambda n, data, idx: np.take(data, idx.astype(np.int64), axis=int(n.attrs.get("axis", 0))),
    "Add": lambda n, a, b: a + b,
    "Sub": lambda n, a, b: a - b,
    "Mul": lambda n, a, b: a * b,
    "Div": lambda n, a, b: a / b,
    "MatMul": lambda n, a, b: a @ b,
    "Transpose": lambda n, x: np.transpose(x, n.attrs.get("perm")),
    "Reshape": _reshape,
    "Softmax": _softmax,
    "Relu": lambda n, x: np.maximum(x, 0),
    "Sigmoid": lambda n, x: 1.0 / (1.0 + np.exp(-x)),
    "Cast": lambda n, x: x.astype(_CAST[int(n.attrs["to"])]),
    "Unsqueeze": _unsqueeze,
    "ReduceSum": _reduce_sum,
    "LayerNormalization": _layer_norm,
}


class BundleRuntime:
    """Runs a parsed bundle graph on numpy feeds."""

    def __init__(self, model_bytes: bytes):
        self.graph: WireGraph = parse(model_bytes)
        unknown = {n.op for n in self.graph.nodes} - set(_OPS)
        if unknown:
            raise ValueError(f"exporter/verifier drift: ops {sorted(unknown)} not implemented")

    def run(self, feeds: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        env = dict(self.graph.initializers)
        env.update(feeds)
        for node in self.graph.nodes:
            args = [env[name] for name in node.inputs]
            result = _OPS[node.op](node, *args)
            env[node.outputs[0]] = result
        return {name: env[name] for name in self.graph.outputs}
