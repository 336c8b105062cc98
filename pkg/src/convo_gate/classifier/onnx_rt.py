"""Numpy executor for the ONNX op subset used by classifier bundles.

Runs the flat graphs produced by the bundle exporter (and any exporter
confined to these ops): elementwise arithmetic, matmul/gemm, gather,
shape manipulation, softmax/activations, reductions, and layer
normalization.  Nodes are executed in graph order, which ONNX requires to
be topologically sorted.
"""

from __future__ import annotations

import numpy as np

from ..errors import BundleError
from .onnx_proto import Graph, Node, decode_model

_CAST_TO_NP = {1: np.float32, 6: np.int32, 7: np.int64, 9: np.bool_, 11: np.float64}


class GraphRunner:
    """Executes a decoded ONNX graph on numpy feeds."""

    def __init__(self, model_bytes: bytes):
        self.graph: Graph = decode_model(model_bytes)
        unsupported = {n.op_type for n in self.graph.nodes if n.op_type not in _OPS}
        if unsupported:
            raise BundleError(f"graph uses unsupported ops: {sorted(unsupported)}")

    @property
    def input_names(self) -> list[str]:
        return [n for n in self.graph.input_names if n not in self.graph.initializers]

    @property
    def output_names(self) -> list[str]:
        return list(self.graph.output_names)

    def run(self, feeds: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        env: dict[str, np.ndarray] = dict(self.graph.initializers)
        missing = set(self.input_names) - set(feeds)
        if missing:
            raise BundleError(f"missing graph inputs: {sorted(missing)}")
        env.update(feeds)
        for node in self.graph.nodes:
            inputs = [env[name] if name else None for name in node.inputs]
            for name in node.inputs:
                if name and name not in env:
                    raise BundleError(f"node {node.name or node.op_type} reads undefined value {name!r}")
            results = _OPS[node.op_type](node, inputs)
            if not isinstance(results, tuple):
                results = (results,)
            for out_name, value in zip(node.outputs, results):
                if out_name:
                    env[out_name] = value
        try:
            return {name: env[name] for name in self.graph.output_names}
        except KeyError as exc:
            raise BundleError(f"graph output {exc} was never produced") from exc


def _axes_from(node: Node, inputs: list, index: int = 1) -> tuple[int, ...] | None:
    """Reduction/squeeze axes: second input (opset >= 13) or attr (older)."""
    if len(inputs) > index and inputs[index] is not None:
        return tuple(int(a) for a in np.asarray(inputs[index]).ravel())
    axes = node.attrs.get("axes")
    if axes is None:
        return None
    return tuple(int(a) for a in axes)


def _reshape(node: Node, inputs: list) -> np.ndarray:
    data, shape = inputs[0], np.asarray(inputs[1]).ravel()
    out_shape = []
    for i, dim in enumerate(shape):
        if dim == 0 and not node.attrs.get("allowzero", 0):
            out_shape.append(data.shape[i])
        else:
            out_shape.append(int(dim))
    return data.reshape(out_shape)


def _softmax(node: Node, inputs: list) -> np.ndarray:
    axis = int(node.attrs.get("axis", -1))
    x = inputs[0]
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def _layer_norm(node: Node, inputs: list) -> np.ndarray:
    x, scale = inputs[0], inputs[1]
    bias = inputs[2] if len(inputs) > 2 and inputs[2] is not None else None
    axis = int(node.attrs.get("axis", -1)) % x.ndim
    epsilon = float(node.attrs.get("epsilon", 1e-5))
    axes = tuple(range(axis, x.ndim))
    mean = x.mean(axis=axes, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=axes, keepdims=True)
    out = (x - mean) / np.sqrt(var + epsilon) * scale
    if bias is not None:
        out = out + bias
    return out.astype(x.dtype, copy=False)


def _gemm(node: Node, inputs: list) -> np.ndarray:
    a, b = inputs[0], inputs[1]
    if node.attrs.get("transA", 0):
        a = a.T
    if node.attrs.get("transB", 0):
        b = b.T
    out = float(node.attrs.get("alpha", 1.0)) * (a @ b)
    if len(inputs) > 2 and inputs[2] is not None:
        out = out + float(node.attrs.get("beta", 1.0)) * inputs[2]
    return out


def _reduce(np_fn):
    def op(node: Node, inputs: list) -> np.ndarray:
        axes = _axes_from(node, inputs)
        keepdims = bool(node.attrs.get("keepdims", 1))
        return np_fn(inputs[0], axis=axes, keepdims=keepdims)
    return op


def _slice(node: Node, inputs: list) -> np.ndarray:
    data = inputs[0]
    starts = np.asarray(inputs[1]).ravel()
    ends = np.asarray(inputs[2]).ravel()
    axes = (np.asarray(inputs[3]).ravel() if len(inputs) > 3 and inputs[3] is not None
            else np.arange(len(starts)))
    steps = (np.asarray(inputs[4]).ravel() if len(inputs) > 4 and inputs[4] is not None
             else np.ones(len(starts), dtype=np.int64))
    slices = [slice(None)] * data.ndim
    for start, end, axis, step in zip(starts, ends, axes, steps):
        slices[int(axis) % data.ndim] = slice(int(start), int(end), int(step))
    return data[tuple(slices)]


def _unsqueeze(node: Node, inputs: list) -> np.ndarray:
    data = inputs[0]
    axes = _axes_from(node, inputs)
    out = data
    for axis in sorted(a % (data.ndim + len(axes)) for a in axes):
        out = np.expand_dims(out, axis)
    return out


def _squeeze(node: Node, inputs: list) -> np.ndarray:
    data = inputs[0]
    axes = _axes_from(node, inputs)
    if axes is None:
        return np.squeeze(data)
    return np.squeeze(data, axis=tuple(a % data.ndim for a in axes))


_OPS = {
    "Add": lambda n, i: i[0] + i[1],
    "Sub": lambda n, i: i[0] - i[1],
    "Mul": lambda n, i: i[0] * i[1],
    "Div": lambda n, i: i[0] / i[1],
    "Neg": lambda n, i: -i[0],
    "MatMul": lambda n, i: i[0] @ i[1],
    "Gemm": _gemm,
    "Gather": lambda n, i: np.take(i[0], i[1].astype(np.int64), axis=int(n.attrs.get("axis", 0))),
    "Transpose": lambda n, i: np.transpose(i[0], n.attrs.get("perm")),
    "Reshape": _reshape,
    "Softmax": _softmax,
    "Relu": lambda n, i: np.maximum(i[0], 0),
    "Sigmoid": lambda n, i: 1.0 / (1.0 + np.exp(-i[0])),
    "Tanh": lambda n, i: np.tanh(i[0]),
    "Erf": lambda n, i: _erf(i[0]),
    "Sqrt": lambda n, i: np.sqrt(i[0]),
    "Exp": lambda n, i: np.exp(i[0]),
    "Pow": lambda n, i: np.power(i[0], i[1]),
    "Cast": lambda n, i: i[0].astype(_CAST_TO_NP[int(n.attrs["to"])]),
    "Identity": lambda n, i: i[0],
    "Concat": lambda n, i: np.concatenate(i, axis=int(n.attrs["axis"])),
    "Slice": _slice,
    "Unsqueeze": _unsqueeze,
    "Squeeze": _squeeze,
    "ReduceSum": _reduce(np.sum),
    "ReduceMean": _reduce(np.mean),
    "ReduceMax": _reduce(np.max),
    "LayerNormalization": _layer_norm,
    "Shape": lambda n, i: np.array(i[0].shape, dtype=np.int64),
    "Constant": lambda n, i: n.attrs["value"],
    "Equal": lambda n, i: i[0] == i[1],
    "Where": lambda n, i: np.where(i[0], i[1], i[2]),
    "Expand": lambda n, i: np.broadcast_to(i[0], np.broadcast_shapes(i[0].shape, tuple(np.asarray(i[1]).ravel()))).copy(),
}


def _erf(x: np.ndarray) -> np.ndarray:
    # Abramowitz & Stegun 7.1.26 rational approximation, max error ~1.5e-7
    sign = np.sign(x)
    ax = np.abs(x)
    t = 1.0 / (1.0 + 0.3275911 * ax)
    poly = t * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))))
    return (sign * (1.0 - poly * np.exp(-ax * ax))).astype(x.dtype, copy=False)
