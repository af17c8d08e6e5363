"""Bit-exact model interchange: JSON manifest + little-endian float32 blob.

The manifest carries the architecture; the blob carries every parameter,
concatenated in layer order, weights before biases within each layer.
Dense weights are row-major [input][output]; conv kernels are
[kh][kw][in_ch][out_ch]. This ordering is normative and shared with the
model exporter. Version 1 manifests are strict: unknown fields are
errors, and the blob must match both the declared SHA-256 and the byte
length implied by the architecture.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .errors import (
    ChecksumMismatch,
    ManifestSyntax,
    ShapeMismatch,
    UnsupportedActivation,
    UnsupportedLayer,
    UnsupportedVersion,
    WeightsLengthMismatch,
)
from .ir import (
    ACTIVATIONS,
    AvgPool2DSpec,
    Conv2DSpec,
    DenseSpec,
    FlattenSpec,
    MaxPool2DSpec,
    NetworkIR,
    ParamSlice,
    TensorShape,
    _layer_output_shape,
)

FORMAT_VERSION = 1

_MANIFEST_FIELDS = {
    "format_version",
    "name",
    "input_shape",
    "layers",
    "weights_file",
    "weights_checksum",
}

_LAYER_FIELDS = {
    "dense": {"kind", "activation", "units"},
    "conv2d": {"kind", "activation", "kernel", "stride", "filters"},
    "avgpool2d": {"kind", "window", "stride"},
    "maxpool2d": {"kind", "window", "stride"},
    "flatten": {"kind"},
}
# Pools and flatten are linear by construction; an explicit "linear" is tolerated.
_OPTIONAL_LINEAR = {"avgpool2d", "maxpool2d", "flatten"}


def _require(cond: bool, message: str):
    if not cond:
        raise ManifestSyntax(message)


def _int_pair(value, what: str) -> tuple[int, int]:
    _require(
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in value),
        f"{what} must be a pair of positive integers",
    )
    return value[0], value[1]


def _positive_int(value, what: str) -> int:
    _require(
        isinstance(value, int) and not isinstance(value, bool) and value >= 1,
        f"{what} must be a positive integer",
    )
    return value


def parse_manifest(manifest_bytes: bytes) -> dict:
    """Decode and structurally check a version-1 manifest; returns the dict."""
    try:
        doc = json.loads(manifest_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ManifestSyntax(f"manifest is not valid UTF-8 JSON: {exc}") from exc
    _require(isinstance(doc, dict), "manifest must be a JSON object")
    unknown = set(doc) - _MANIFEST_FIELDS
    _require(not unknown, f"unknown manifest fields: {sorted(unknown)}")
    missing = _MANIFEST_FIELDS - set(doc)
    _require(not missing, f"missing manifest fields: {sorted(missing)}")

    version = doc["format_version"]
    _require(isinstance(version, int) and not isinstance(version, bool), "format_version must be an integer")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"format_version {version} is not supported (expected {FORMAT_VERSION})")

    _require(isinstance(doc["name"], str) and doc["name"], "name must be a non-empty string")
    shape = doc["input_shape"]
    _require(
        isinstance(shape, list)
        and 1 <= len(shape) <= 3
        and all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in shape),
        "input_shape must be a list of 1-3 positive integers",
    )
    _require(isinstance(doc["weights_file"], str) and doc["weights_file"], "weights_file must be a non-empty string")
    checksum = doc["weights_checksum"]
    _require(
        isinstance(checksum, str) and len(checksum) == 64 and all(c in "0123456789abcdef" for c in checksum),
        "weights_checksum must be 64 lowercase hex characters",
    )
    layers = doc["layers"]
    _require(isinstance(layers, list) and layers, "layers must be a non-empty list")
    for i, desc in enumerate(layers):
        _check_layer_descriptor(desc, i)
    return doc


def _check_layer_descriptor(desc, index: int):
    _require(isinstance(desc, dict), f"layer {index} must be an object")
    kind = desc.get("kind")
    _require(isinstance(kind, str), f"layer {index} is missing its kind")
    if kind not in _LAYER_FIELDS:
        raise UnsupportedLayer(f"layer {index}: unsupported kind {kind!r}")
    allowed = set(_LAYER_FIELDS[kind])
    if kind in _OPTIONAL_LINEAR:
        allowed = allowed | {"activation"}
    unknown = set(desc) - allowed
    _require(not unknown, f"layer {index} ({kind}): unknown fields {sorted(unknown)}")
    missing = _LAYER_FIELDS[kind] - set(desc)
    _require(not missing, f"layer {index} ({kind}): missing fields {sorted(missing)}")

    if kind in _OPTIONAL_LINEAR:
        if "activation" in desc and desc["activation"] != "linear":
            raise UnsupportedActivation(
                f"layer {index} ({kind}): must be linear, got {desc['activation']!r}"
            )
    else:
        act = desc["activation"]
        _require(isinstance(act, str), f"layer {index}: activation must be a string")
        if act not in ACTIVATIONS:
            raise UnsupportedActivation(f"layer {index}: unsupported activation {act!r}")

    if kind == "dense":
        _positive_int(desc["units"], f"layer {index}: units")
    elif kind == "conv2d":
        _int_pair(desc["kernel"], f"layer {index}: kernel")
        _int_pair(desc["stride"], f"layer {index}: stride")
        _positive_int(desc["filters"], f"layer {index}: filters")
    elif kind in ("avgpool2d", "maxpool2d"):
        _int_pair(desc["window"], f"layer {index}: window")
        _int_pair(desc["stride"], f"layer {index}: stride")


def _assemble_layers(doc: dict) -> tuple[list, int]:
    """Walk the shape chain, assigning parameter slices in manifest order."""
    layers = []
    offset = 0
    shape = TensorShape(tuple(doc["input_shape"]))
    for i, desc in enumerate(doc["layers"]):
        kind = desc["kind"]
        if kind == "dense":
            if shape.rank != 1:
                raise ShapeMismatch(
                    f"layer {i}: dense needs a rank-1 input, got {shape.dims} (insert flatten)"
                )
            in_count = shape.dims[0]
            units = desc["units"]
            w = ParamSlice(offset, in_count * units)
            b = ParamSlice(w.stop, units)
            offset = b.stop
            layer = DenseSpec(in_count, units, desc["activation"], w, b)
        elif kind == "conv2d":
            if shape.rank != 3:
                raise ShapeMismatch(
                    f"layer {i}: conv2d needs a rank-3 (h, w, c) input, got {shape.dims}"
                )
            k_h, k_w = desc["kernel"]
            s_h, s_w = desc["stride"]
            in_c = shape.dims[2]
            filters = desc["filters"]
            w = ParamSlice(offset, k_h * k_w * in_c * filters)
            b = ParamSlice(w.stop, filters)
            offset = b.stop
            layer = Conv2DSpec(k_h, k_w, in_c, filters, s_h, s_w, desc["activation"], w, b)
        elif kind in ("avgpool2d", "maxpool2d"):
            w_h, w_w = desc["window"]
            s_h, s_w = desc["stride"]
            cls = AvgPool2DSpec if kind == "avgpool2d" else MaxPool2DSpec
            layer = cls(w_h, w_w, s_h, s_w)
        else:
            layer = FlattenSpec()
        shape = _layer_output_shape(layer, shape)
        layers.append(layer)
    return layers, offset


def load_model(manifest_bytes: bytes, weights_bytes: bytes) -> NetworkIR:
    """Parse, length-check, checksum, assemble, and validate; all-or-nothing."""
    doc = parse_manifest(manifest_bytes)
    layers, param_count = _assemble_layers(doc)

    expected_bytes = 4 * param_count
    if len(weights_bytes) != expected_bytes:
        raise WeightsLengthMismatch(expected_bytes, len(weights_bytes))
    digest = hashlib.sha256(weights_bytes).hexdigest()
    if digest != doc["weights_checksum"]:
        raise ChecksumMismatch(
            f"weights blob digest {digest} does not match manifest {doc['weights_checksum']}"
        )

    parameters = np.frombuffer(weights_bytes, dtype="<f4").astype(np.float32)
    network = NetworkIR(
        name=doc["name"],
        input_shape=TensorShape(tuple(doc["input_shape"])),
        layers=tuple(layers),
        parameters=parameters,
    )
    return network.require_valid()


def _layer_descriptor(layer) -> dict:
    if isinstance(layer, DenseSpec):
        return {"kind": "dense", "activation": layer.activation, "units": layer.out_count}
    if isinstance(layer, Conv2DSpec):
        return {
            "kind": "conv2d",
            "activation": layer.activation,
            "kernel": [layer.kernel_h, layer.kernel_w],
            "stride": [layer.stride_h, layer.stride_w],
            "filters": layer.out_channels,
        }
    if isinstance(layer, (AvgPool2DSpec, MaxPool2DSpec)):
        return {
            "kind": layer.kind,
            "window": [layer.window_h, layer.window_w],
            "stride": [layer.stride_h, layer.stride_w],
        }
    return {"kind": "flatten"}


def save_model(network: NetworkIR, weights_file: str | None = None) -> tuple[bytes, bytes]:
    """Serialize to (manifest_bytes, weights_bytes); load_model inverts exactly.

    Parameters leave as their verbatim float32 bytes, so any bit pattern
    (subnormals included) survives the round trip.
    """
    network.require_valid()
    weights_bytes = np.ascontiguousarray(network.parameters, dtype="<f4").tobytes()
    doc = {
        "format_version": FORMAT_VERSION,
        "name": network.name,
        "input_shape": list(network.input_shape.dims),
        "layers": [_layer_descriptor(l) for l in network.layers],
        "weights_file": weights_file or f"{network.name}.bin",
        "weights_checksum": hashlib.sha256(weights_bytes).hexdigest(),
    }
    manifest_bytes = (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    return manifest_bytes, weights_bytes
