"""Minimal ONNX protobuf codec (wire format, no protoc dependency).

Covers the ModelProto subset external classifier bundles use: a flat graph
of nodes with scalar/ints attributes, tensor initializers carried as
raw_data, and tensor-typed graph inputs/outputs.  Files written here are
valid ONNX protobufs; files read here may come from any exporter that
stays within this subset.

Field numbers follow onnx.proto (ModelProto: ir_version=1, graph=7,
opset_import=8; GraphProto: node=1, name=2, initializer=5, input=11,
output=12; NodeProto: input=1, output=2, name=3, op_type=4, attribute=5;
TensorProto: dims=1, data_type=2, float_data=4, int32_data=5,
int64_data=7, name=8, raw_data=9; AttributeProto: name=1, f=2, i=3, s=4,
t=5, floats=7, ints=8, type=20).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import BundleError

# TensorProto.DataType
FLOAT = 1
INT32 = 6
INT64 = 7
BOOL = 9
DOUBLE = 11

_NP_TO_ONNX = {
    np.dtype(np.float32): FLOAT,
    np.dtype(np.int32): INT32,
    np.dtype(np.int64): INT64,
    np.dtype(np.bool_): BOOL,
    np.dtype(np.float64): DOUBLE,
}
_ONNX_TO_NP = {v: k for k, v in _NP_TO_ONNX.items()}

# AttributeProto.AttributeType
_ATTR_FLOAT, _ATTR_INT, _ATTR_STRING, _ATTR_TENSOR = 1, 2, 3, 4
_ATTR_FLOATS, _ATTR_INTS = 6, 7


# ---------------------------------------------------------------- writing

def _varint(value: int) -> bytes:
    if value < 0:
        value += 1 << 64
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _tag(field_no: int, wire_type: int) -> bytes:
    return _varint((field_no << 3) | wire_type)


def _field_varint(field_no: int, value: int) -> bytes:
    return _tag(field_no, 0) + _varint(value)


def _field_bytes(field_no: int, payload: bytes) -> bytes:
    return _tag(field_no, 2) + _varint(len(payload)) + payload


def _field_string(field_no: int, value: str) -> bytes:
    return _field_bytes(field_no, value.encode("utf-8"))


def _field_float(field_no: int, value: float) -> bytes:
    return _tag(field_no, 5) + struct.pack("<f", value)


def encode_tensor(name: str, array: np.ndarray) -> bytes:
    dtype = np.dtype(array.dtype)
    if dtype not in _NP_TO_ONNX:
        raise BundleError(f"unsupported tensor dtype {dtype} for {name!r}")
    out = b""
    for d in array.shape:
        out += _field_varint(1, int(d))
    out += _field_varint(2, _NP_TO_ONNX[dtype])
    out += _field_string(8, name)
    out += _field_bytes(9, np.ascontiguousarray(array).astype(dtype.newbyteorder("<")).tobytes())
    return out


def _encode_attribute(name: str, value) -> bytes:
    out = _field_string(1, name)
    if isinstance(value, bool):
        out += _field_varint(3, int(value)) + _field_varint(20, _ATTR_INT)
    elif isinstance(value, int):
        out += _field_varint(3, value) + _field_varint(20, _ATTR_INT)
    elif isinstance(value, float):
        out += _field_float(2, value) + _field_varint(20, _ATTR_FLOAT)
    elif isinstance(value, str):
        out += _field_bytes(4, value.encode("utf-8")) + _field_varint(20, _ATTR_STRING)
    elif isinstance(value, np.ndarray):
        out += _field_bytes(5, encode_tensor("", value)) + _field_varint(20, _ATTR_TENSOR)
    elif isinstance(value, (list, tuple)) and all(isinstance(v, int) for v in value):
        for v in value:
            out += _field_varint(8, v)
        out += _field_varint(20, _ATTR_INTS)
    elif isinstance(value, (list, tuple)) and all(isinstance(v, float) for v in value):
        for v in value:
            out += _field_float(7, v)
        out += _field_varint(20, _ATTR_FLOATS)
    else:
        raise BundleError(f"unsupported attribute value for {name!r}: {value!r}")
    return out


def encode_node(op_type: str, inputs: list[str], outputs: list[str], name: str = "", **attrs) -> bytes:
    out = b""
    for i in inputs:
        out += _field_string(1, i)
    for o in outputs:
        out += _field_string(2, o)
    if name:
        out += _field_string(3, name)
    out += _field_string(4, op_type)
    for attr_name, attr_value in attrs.items():
        out += _field_bytes(5, _encode_attribute(attr_name, attr_value))
    return out


def _encode_dim(dim) -> bytes:
    if isinstance(dim, str):
        return _field_string(2, dim)
    return _field_varint(1, int(dim))


def encode_value_info(name: str, elem_type: int, dims: list) -> bytes:
    shape = b"".join(_field_bytes(1, _encode_dim(d)) for d in dims)
    tensor_type = _field_varint(1, elem_type) + _field_bytes(2, shape)
    type_proto = _field_bytes(1, tensor_type)
    return _field_string(1, name) + _field_bytes(2, type_proto)


def encode_model(nodes: list[bytes], graph_name: str, inputs: list[bytes], outputs: list[bytes],
                 initializers: list[bytes], opset_version: int = 17,
                 producer: str = "convo-gate") -> bytes:
    graph = b"".join(_field_bytes(1, n) for n in nodes)
    graph += _field_string(2, graph_name)
    graph += b"".join(_field_bytes(5, t) for t in initializers)
    graph += b"".join(_field_bytes(11, vi) for vi in inputs)
    graph += b"".join(_field_bytes(12, vi) for vi in outputs)
    opset = _field_string(1, "") + _field_varint(2, opset_version)
    model = _field_varint(1, 8)  # IR version 8 pairs with opset 17
    model += _field_string(2, producer)
    model += _field_bytes(7, graph)
    model += _field_bytes(8, opset)
    return model


# ---------------------------------------------------------------- reading

def _iter_fields(buf: bytes):
    pos = 0
    n = len(buf)
    while pos < n:
        tag, pos = _read_varint(buf, pos)
        field_no, wire_type = tag >> 3, tag & 7
        if wire_type == 0:
            value, pos = _read_varint(buf, pos)
        elif wire_type == 1:
            value = buf[pos:pos + 8]
            pos += 8
        elif wire_type == 2:
            length, pos = _read_varint(buf, pos)
            value = buf[pos:pos + length]
            pos += length
        elif wire_type == 5:
            value = buf[pos:pos + 4]
            pos += 4
        else:
            raise BundleError(f"unsupported protobuf wire type {wire_type}")
        yield field_no, wire_type, value


def _read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise BundleError("truncated protobuf varint")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7


@dataclass
class Node:
    op_type: str
    inputs: list[str]
    outputs: list[str]
    name: str = ""
    attrs: dict = field(default_factory=dict)


@dataclass
class Graph:
    nodes: list[Node]
    initializers: dict[str, np.ndarray]
    input_names: list[str]
    output_names: list[str]
    name: str = ""


def decode_tensor(buf: bytes) -> tuple[str, np.ndarray]:
    dims: list[int] = []
    data_type = FLOAT
    name = ""
    raw = None
    float_data: list[float] = []
    int32_data: list[int] = []
    int64_data: list[int] = []
    for field_no, wire_type, value in _iter_fields(buf):
        if field_no == 1 and wire_type == 0:
            dims.append(value)
        elif field_no == 2:
            data_type = value
        elif field_no == 8:
            name = value.decode("utf-8")
        elif field_no == 9:
            raw = value
        elif field_no == 4:
            float_data.extend(struct.unpack(f"<{len(value) // 4}f", value) if wire_type == 2
                              else struct.unpack("<f", value))
        elif field_no == 5 and wire_type == 2:
            int32_data.extend(_decode_packed_varints(value))
        elif field_no == 7 and wire_type == 2:
            int64_data.extend(_decode_packed_varints(value))
        elif field_no == 7 and wire_type == 0:
            int64_data.append(value)
        elif field_no == 5 and wire_type == 0:
            int32_data.append(value)
    if data_type not in _ONNX_TO_NP:
        raise BundleError(f"unsupported tensor data type {data_type} for {name!r}")
    dtype = _ONNX_TO_NP[data_type]
    if raw is not None:
        array = np.frombuffer(raw, dtype=dtype.newbyteorder("<")).astype(dtype)
    elif float_data:
        array = np.array(float_data, dtype=dtype)
    elif int64_data:
        array = np.array([_to_signed64(v) for v in int64_data], dtype=dtype)
    elif int32_data:
        array = np.array([_to_signed64(v) for v in int32_data], dtype=dtype)
    else:
        array = np.zeros(0, dtype=dtype)
    return name, array.reshape(dims) if dims else array.reshape(())


def _decode_packed_varints(buf: bytes) -> list[int]:
    values = []
    pos = 0
    while pos < len(buf):
        value, pos = _read_varint(buf, pos)
        values.append(value)
    return values


def _to_signed64(value: int) -> int:
    return value - (1 << 64) if value >= (1 << 63) else value


def _decode_attribute(buf: bytes):
    name = ""
    attr_type = 0
    f_val = 0.0
    i_val = 0
    s_val = b""
    t_val = None
    floats: list[float] = []
    ints: list[int] = []
    for field_no, wire_type, value in _iter_fields(buf):
        if field_no == 1:
            name = value.decode("utf-8")
        elif field_no == 2:
            f_val = struct.unpack("<f", value)[0]
        elif field_no == 3:
            i_val = _to_signed64(value)
        elif field_no == 4:
            s_val = value
        elif field_no == 5:
            t_val = decode_tensor(value)[1]
        elif field_no == 7:
            floats.extend(struct.unpack(f"<{len(value) // 4}f", value) if wire_type == 2
                          else struct.unpack("<f", value))
        elif field_no == 8:
            if wire_type == 2:
                ints.extend(_to_signed64(v) for v in _decode_packed_varints(value))
            else:
                ints.append(_to_signed64(value))
        elif field_no == 20:
            attr_type = value
    if attr_type == _ATTR_FLOAT:
        return name, f_val
    if attr_type == _ATTR_INT:
        return name, i_val
    if attr_type == _ATTR_STRING:
        return name, s_val.decode("utf-8")
    if attr_type == _ATTR_TENSOR:
        return name, t_val
    if attr_type == _ATTR_FLOATS:
        return name, list(floats)
    if attr_type == _ATTR_INTS:
        return name, list(ints)
    # tolerate exporters that omit the type field on scalars
    if ints:
        return name, list(ints)
    if floats:
        return name, list(floats)
    return name, i_val


def _decode_node(buf: bytes) -> Node:
    node = Node(op_type="", inputs=[], outputs=[])
    for field_no, _, value in _iter_fields(buf):
        if field_no == 1:
            node.inputs.append(value.decode("utf-8"))
        elif field_no == 2:
            node.outputs.append(value.decode("utf-8"))
        elif field_no == 3:
            node.name = value.decode("utf-8")
        elif field_no == 4:
            node.op_type = value.decode("utf-8")
        elif field_no == 5:
            attr_name, attr_value = _decode_attribute(value)
            node.attrs[attr_name] = attr_value
    return node


def _decode_value_info_name(buf: bytes) -> str:
    for field_no, _, value in _iter_fields(buf):
        if field_no == 1:
            return value.decode("utf-8")
    return ""


def decode_model(blob: bytes) -> Graph:
    graph_buf = None
    for field_no, _, value in _iter_fields(blob):
        if field_no == 7:
            graph_buf = value
    if graph_buf is None:
        raise BundleError("model protobuf has no graph")
    nodes: list[Node] = []
    initializers: dict[str, np.ndarray] = {}
    input_names: list[str] = []
    output_names: list[str] = []
    name = ""
    for field_no, _, value in _iter_fields(graph_buf):
        if field_no == 1:
            nodes.append(_decode_node(value))
        elif field_no == 2:
            name = value.decode("utf-8")
        elif field_no == 5:
            tensor_name, array = decode_tensor(value)
            initializers[tensor_name] = array
        elif field_no == 11:
            input_names.append(_decode_value_info_name(value))
        elif field_no == 12:
            output_names.append(_decode_value_info_name(value))
    return Graph(nodes=nodes, initializers=initializers,
                 input_names=input_names, output_names=output_names, name=name)
