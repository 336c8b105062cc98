"""ONNX protobuf wire codec for exported classifier graphs.

Writes (and reads back, for export self-verification) the ModelProto
subset the bundles need: nodes with scalar/ints attributes, raw-data
tensor initializers, tensor-typed value infos.  No protobuf runtime is
involved; fields are emitted straight in wire format against the field
numbers of onnx.proto.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

# TensorProto.DataType values
FLOAT32 = 1
INT64 = 7

_DTYPES = {np.dtype(np.float32): FLOAT32, np.dtype(np.int64): INT64}
_NUMPY = {FLOAT32: np.float32, INT64: np.int64}

# AttributeProto.AttributeType values
_A_FLOAT, _A_INT, _A_INTS = 1, 2, 7


def _uvarint(value: int) -> bytes:
    if value < 0:
        value += 1 << 64
    chunks = bytearray()
    while True:
        low, value = value & 0x7F, value >> 7
        chunks.append(low | (0x80 if value else 0))
        if not value:
            return bytes(chunks)


def _scalar(field_no: int, value: int) -> bytes:
    return _uvarint(field_no << 3) + _uvarint(value)


def _blob(field_no: int, payload: bytes) -> bytes:
    return _uvarint((field_no << 3) | 2) + _uvarint(len(payload)) + payload


def _text(field_no: int, value: str) -> bytes:
    return _blob(field_no, value.encode("utf-8"))


def _f32(field_no: int, value: float) -> bytes:
    return _uvarint((field_no << 3) | 5) + struct.pack("<f", value)


def tensor(name: str, array: np.ndarray) -> bytes:
    dtype = np.dtype(array.dtype)
    if dtype not in _DTYPES:
        raise ValueError(f"tensor {name!r}: dtype {dtype} not supported in bundles")
    body = b"".join(_scalar(1, int(d)) for d in array.shape)
    body += _scalar(2, _DTYPES[dtype])
    body += _text(8, name)
    body += _blob(9, np.ascontiguousarray(array).astype(dtype.newbyteorder("<")).tobytes())
    return body


def _attribute(name: str, value) -> bytes:
    body = _text(1, name)
    if isinstance(value, (list, tuple)):
        body += b"".join(_scalar(8, int(v)) for v in value)
        body += _scalar(20, _A_INTS)
    elif isinstance(value, float):
        body += _f32(2, value) + _scalar(20, _A_FLOAT)
    else:
        body += _scalar(3, int(value)) + _scalar(20, _A_INT)
    return body


def node(op: str, inputs: list[str], outputs: list[str], **attrs) -> bytes:
    body = b"".join(_text(1, i) for i in inputs)
    body += b"".join(_text(2, o) for o in outputs)
    body += _text(4, op)
    body += b"".join(_blob(5, _attribute(k, v)) for k, v in attrs.items())
    return body


def value_info(name: str, elem_type: int, dims: list) -> bytes:
    shape = b"".join(
        _blob(1, _text(2, d) if isinstance(d, str) else _scalar(1, int(d))) for d in dims
    )
    tensor_type = _scalar(1, elem_type) + _blob(2, shape)
    return _text(1, name) + _blob(2, _blob(1, tensor_type))


def model(nodes: list[bytes], inputs: list[bytes], outputs: list[bytes],
          initializers: list[bytes], name: str = "intent-classifier",
          opset: int = 17) -> bytes:
    graph = b"".join(_blob(1, n) for n in nodes)
    graph += _text(2, name)
    graph += b"".join(_blob(5, t) for t in initializers)
    graph += b"".join(_blob(11, vi) for vi in inputs)
    graph += b"".join(_blob(12, vi) for vi in outputs)
    out = _scalar(1, 8)                      # ir_version 8
    out += _text(2, "intent-trainer")
    out += _blob(7, graph)
    out += _blob(8, _text(1, "") + _scalar(2, opset))
    return out


# ----------------------------------------------------------------- reading

@dataclass
class WireNode:
    op: str = ""
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    attrs: dict = field(default_factory=dict)


@dataclass
class WireGraph:
    nodes: list[WireNode]
    initializers: dict[str, np.ndarray]
    inputs: list[str]
    outputs: list[str]


def _fields(buf: bytes):
    pos, n = 0, len(buf)
    while pos < n:
        tag, pos = _read_uvarint(buf, pos)
        field_no, wire = tag >> 3, tag & 7
        if wire == 0:
            value, pos = _read_uvarint(buf, pos)
        elif wire == 2:
            size, pos = _read_uvarint(buf, pos)
            value, pos = buf[pos:pos + size], pos + size
        elif wire == 5:
            value, pos = buf[pos:pos + 4], pos + 4
        elif wire == 1:
            value, pos = buf[pos:pos + 8], pos + 8
        else:
            raise ValueError(f"wire type {wire} not handled")
        yield field_no, wire, value


def _read_uvarint(buf: bytes, pos: int) -> tuple[int, int]:
    out = shift = 0
    while True:
        byte = buf[pos]
        pos += 1
        out |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return out, pos
        shift += 7


def _signed(value: int) -> int:
    return value - (1 << 64) if value >= (1 << 63) else value


def _read_tensor(buf: bytes) -> tuple[str, np.ndarray]:
    dims, dtype, name, raw = [], FLOAT32, "", b""
    for field_no, wire, value in _fields(buf):
        if field_no == 1 and wire == 0:
            dims.append(value)
        elif field_no == 2:
            dtype = value
        elif field_no == 8:
            name = value.decode("utf-8")
        elif field_no == 9:
            raw = value
    array = np.frombuffer(raw, dtype=_NUMPY[dtype]).reshape(dims)
    return name, array


def _read_attribute(buf: bytes):
    name, kind = "", 0
    f_val, i_val, ints = 0.0, 0, []
    for field_no, wire, value in _fields(buf):
        if field_no == 1:
            name = value.decode("utf-8")
        elif field_no == 2:
            f_val = struct.unpack("<f", value)[0]
        elif field_no == 3:
            i_val = _signed(value)
        elif field_no == 8:
            if wire == 2:
                pos = 0
                while pos < len(value):
                    v, pos = _read_uvarint(value, pos)
                    ints.append(_signed(v))
            else:
                ints.append(_signed(value))
        elif field_no == 20:
            kind = value
    if kind == _A_FLOAT:
        return name, f_val
    if kind == _A_INTS:
        return name, ints
    return name, i_val


def _read_node(buf: bytes) -> WireNode:
    out = WireNode()
    for field_no, _, value in _fields(buf):
        if field_no == 1:
            out.inputs.append(value.decode("utf-8"))
        elif field_no == 2:
            out.outputs.append(value.decode("utf-8"))
        elif field_no == 4:
            out.op = value.decode("utf-8")
        elif field_no == 5:
            k, v = _read_attribute(value)
            out.attrs[k] = v
    return out


def _value_info_name(buf: bytes) -> str:
    for field_no, _, value in _fields(buf):
        if field_no == 1:
            return value.decode("utf-8")
    return ""


def parse(blob: bytes) -> WireGraph:
    graph_buf = None
    for field_no, _, value in _fields(blob):
        if field_no == 7:
            graph_buf = value
    if graph_buf is None:
        raise ValueError("no graph in model protobuf")
    nodes, initializers, inputs, outputs = [], {}, [], []
    for field_no, _, value in _fields(graph_buf):
        if field_no == 1:
            nodes.append(_read_node(value))
        elif field_no == 5:
            name, array = _read_tensor(value)
            initializers[name] = array
        elif field_no == 11:
            inputs.append(_value_info_name(value))
        elif field_no == 12:
            outputs.append(_value_info_name(value))
    return WireGraph(nodes, initializers, inputs, outputs)
