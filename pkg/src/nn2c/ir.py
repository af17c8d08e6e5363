"""In-memory network representation and its shape/statistics algebra.

A network is an ordered chain of layers over a flat float32 parameter
array; each parameterized layer owns two disjoint slices of that array
(weights, then biases). Shapes are rank 1-3 and interpreted as
(len) | (h, w) | (h, w, channels), stored row-major.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Union

import numpy as np

from .errors import (
    NetworkValidationError,
    NonIntegralPoolOutput,
    ShapeMismatch,
)

ACTIVATIONS = ("linear", "relu", "sigmoid", "tanh")
LAYER_KINDS = ("dense", "conv2d", "avgpool2d", "maxpool2d", "flatten")


@dataclass(frozen=True)
class TensorShape:
    """Shape of one activation tensor; dims are positive, rank 1-3."""

    dims: tuple[int, ...]

    def __post_init__(self):
        if not (1 <= len(self.dims) <= 3):
            raise ShapeMismatch(f"rank must be 1-3, got {self.dims}")
        if any(int(d) <= 0 for d in self.dims):
            raise ShapeMismatch(f"dimensions must be positive, got {self.dims}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def rank(self) -> int:
        return len(self.dims)

    @property
    def count(self) -> int:
        n = 1
        for d in self.dims:
            n *= d
        return n


@dataclass(frozen=True)
class ParamSlice:
    """Half-open window [start, start+length) into the parameter array."""

    start: int
    length: int

    @property
    def stop(self) -> int:
        return self.start + self.length

    def as_slice(self) -> slice:
        return slice(self.start, self.stop)


EMPTY_SLICE = ParamSlice(0, 0)


@dataclass(frozen=True)
class DenseSpec:
    in_count: int
    out_count: int
    activation: str
    weight_slice: ParamSlice
    bias_slice: ParamSlice

    kind: ClassVar[str] = "dense"


@dataclass(frozen=True)
class Conv2DSpec:
    """Valid-padding cross-correlation, kernel laid out [kh][kw][in_ch][out_ch]."""

    kernel_h: int
    kernel_w: int
    in_channels: int
    out_channels: int
    stride_h: int
    stride_w: int
    activation: str
    weight_slice: ParamSlice
    bias_slice: ParamSlice

    kind: ClassVar[str] = "conv2d"


@dataclass(frozen=True)
class AvgPool2DSpec:
    window_h: int
    window_w: int
    stride_h: int
    stride_w: int

    kind: ClassVar[str] = "avgpool2d"
    activation: ClassVar[str] = "linear"
    weight_slice: ClassVar[ParamSlice] = EMPTY_SLICE
    bias_slice: ClassVar[ParamSlice] = EMPTY_SLICE


@dataclass(frozen=True)
class MaxPool2DSpec:
    window_h: int
    window_w: int
    stride_h: int
    stride_w: int

    kind: ClassVar[str] = "maxpool2d"
    activation: ClassVar[str] = "linear"
    weight_slice: ClassVar[ParamSlice] = EMPTY_SLICE
    bias_slice: ClassVar[ParamSlice] = EMPTY_SLICE


@dataclass(frozen=True)
class FlattenSpec:
    kind: ClassVar[str] = "flatten"
    activation: ClassVar[str] = "linear"
    weight_slice: ClassVar[ParamSlice] = EMPTY_SLICE
    bias_slice: ClassVar[ParamSlice] = EMPTY_SLICE


LayerSpec = Union[DenseSpec, Conv2DSpec, AvgPool2DSpec, MaxPool2DSpec, FlattenSpec]

PoolSpec = (AvgPool2DSpec, MaxPool2DSpec)


@dataclass(frozen=True)
class ValidationIssue:
    """One violated invariant; `layer` is None for network-level issues."""

    code: str
    message: str
    layer: int | None = None

    def __str__(self) -> str:
        where = f"layer {self.layer}: " if self.layer is not None else ""
        return f"{self.code}: {where}{self.message}"


@dataclass(frozen=True)
class NetworkIR:
    """Immutable feed-forward network: input shape, layer chain, flat parameters.

    Construction is permissive so that `validate` can report every broken
    invariant; use `require_valid` (or `ingest.load_model`, which calls it)
    to obtain a network that is guaranteed well-formed. The parameter array
    is frozen read-only on construction.
    """

    name: str
    input_shape: TensorShape
    layers: tuple[LayerSpec, ...]
    parameters: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        params = np.asarray(self.parameters, dtype=np.float32).reshape(-1)
        params.flags.writeable = False
        object.__setattr__(self, "parameters", params)

    def weights_of(self, index: int) -> np.ndarray:
        return self.parameters[self.layers[index].weight_slice.as_slice()]

    def biases_of(self, index: int) -> np.ndarray:
        return self.parameters[self.layers[index].bias_slice.as_slice()]

    @property
    def output_shape(self) -> TensorShape:
        return infer_shapes(self)[-1]

    def require_valid(self) -> "NetworkIR":
        issues = validate(self)
        if issues:
            raise NetworkValidationError(issues)
        return self


def _layer_output_shape(layer: LayerSpec, shape: TensorShape) -> TensorShape:
    """Shape produced by `layer` when fed `shape`; raises on mismatch."""
    if isinstance(layer, DenseSpec):
        if shape.rank != 1:
            raise ShapeMismatch(
                f"dense needs a rank-1 input, got {shape.dims} (insert flatten)"
            )
        if shape.dims[0] != layer.in_count:
            raise ShapeMismatch(
                f"dense expects {layer.in_count} inputs, predecessor yields {shape.dims[0]}"
            )
        return TensorShape((layer.out_count,))

    if isinstance(layer, FlattenSpec):
        return TensorShape((shape.count,))

    # conv2d and the pools share the valid-padding window rule
    if shape.rank != 3:
        raise ShapeMismatch(f"{layer.kind} needs a rank-3 (h, w, c) input, got {shape.dims}")
    in_h, in_w, in_c = shape.dims
    if isinstance(layer, Conv2DSpec):
        win_h, win_w = layer.kernel_h, layer.kernel_w
        if layer.in_channels != in_c:
            raise ShapeMismatch(
                f"conv2d expects {layer.in_channels} input channels, got {in_c}"
            )
        out_c = layer.out_channels
    else:
        win_h, win_w = layer.window_h, layer.window_w
        out_c = in_c
    if win_h > in_h or win_w > in_w:
        raise ShapeMismatch(
            f"{layer.kind} window {win_h}x{win_w} exceeds input {in_h}x{in_w}"
        )
    if (in_h - win_h) % layer.stride_h or (in_w - win_w) % layer.stride_w:
        raise NonIntegralPoolOutput(
            f"{layer.kind} stride {layer.stride_h}x{layer.stride_w} does not "
            f"tile {in_h}x{in_w} with window {win_h}x{win_w}"
        )
    out_h = (in_h - win_h) // layer.stride_h + 1
    out_w = (in_w - win_w) // layer.stride_w + 1
    return TensorShape((out_h, out_w, out_c))


def infer_shapes(network: NetworkIR) -> list[TensorShape]:
    """Per-layer output shapes, checking that consecutive layers compose."""
    if not network.layers:
        raise ShapeMismatch("network has no layers")
    shapes = []
    current = network.input_shape
    for layer in network.layers:
        current = _layer_output_shape(layer, current)
        shapes.append(current)
    return shapes


def count_connections(network: NetworkIR) -> int:
    """Total trainable parameter count, biases included."""
    return sum(l.weight_slice.length + l.bias_slice.length for l in network.layers)


def _expected_param_lengths(layer: LayerSpec) -> tuple[int, int]:
    if isinstance(layer, DenseSpec):
        return layer.in_count * layer.out_count, layer.out_count
    if isinstance(layer, Conv2DSpec):
        return (
            layer.kernel_h * layer.kernel_w * layer.in_channels * layer.out_channels,
            layer.out_channels,
        )
    return 0, 0


def validate(network: NetworkIR) -> list[ValidationIssue]:
    """Check every structural invariant; returns all violations, not just the first."""
    issues: list[ValidationIssue] = []

    if not network.layers:
        issues.append(ValidationIssue("UnsupportedLayer", "network has no layers"))
        return issues

    for i, layer in enumerate(network.layers):
        if layer.kind not in LAYER_KINDS:
            issues.append(
                ValidationIssue("UnsupportedLayer", f"unknown kind {layer.kind!r}", i)
            )
            continue
        if layer.activation not in ACTIVATIONS:
            issues.append(
                ValidationIssue(
                    "UnsupportedActivation", f"unknown activation {layer.activation!r}", i
                )
            )
        if isinstance(layer, PoolSpec) or isinstance(layer, FlattenSpec):
            if layer.weight_slice.length or layer.bias_slice.length:
                issues.append(
                    ValidationIssue(
                        "SliceOverlap", f"{layer.kind} must not own parameters", i
                    )
                )
        dims = [
            v
            for v in (
                getattr(layer, "in_count", 1),
                getattr(layer, "out_count", 1),
                getattr(layer, "kernel_h", 1),
                getattr(layer, "kernel_w", 1),
                getattr(layer, "in_channels", 1),
                getattr(layer, "out_channels", 1),
                getattr(layer, "window_h", 1),
                getattr(layer, "window_w", 1),
                getattr(layer, "stride_h", 1),
                getattr(layer, "stride_w", 1),
            )
        ]
        if any(int(v) < 1 for v in dims):
            issues.append(
                ValidationIssue("ShapeMismatch", f"{layer.kind} has a non-positive dimension", i)
            )
            continue
        expect_w, expect_b = _expected_param_lengths(layer)
        if layer.weight_slice.length != expect_w:
            issues.append(
                ValidationIssue(
                    "SliceOutOfBounds",
                    f"weight slice holds {layer.weight_slice.length} values, "
                    f"{layer.kind} needs {expect_w}",
                    i,
                )
            )
        if layer.bias_slice.length != expect_b:
            issues.append(
                ValidationIssue(
                    "SliceOutOfBounds",
                    f"bias slice holds {layer.bias_slice.length} values, "
                    f"{layer.kind} needs {expect_b}",
                    i,
                )
            )

    # Slice bounds, overlap, and exact coverage of the parameter array.
    total = len(network.parameters)
    windows = []
    for i, layer in enumerate(network.layers):
        for label, sl in (("weight", layer.weight_slice), ("bias", layer.bias_slice)):
            if sl.length == 0:
                continue
            if sl.start < 0 or sl.stop > total:
                issues.append(
                    ValidationIssue(
                        "SliceOutOfBounds",
                        f"{label} slice [{sl.start}, {sl.stop}) outside parameter "
                        f"array of length {total}",
                        i,
                    )
                )
            else:
                windows.append((sl.start, sl.stop, i, label))
    windows.sort()
    for (s0, e0, i0, l0), (s1, e1, i1, l1) in zip(windows, windows[1:]):
        if s1 < e0:
            issues.append(
                ValidationIssue(
                    "SliceOverlap",
                    f"layer {i0} {l0} slice overlaps layer {i1} {l1} slice",
                    i1,
                )
            )
    covered = sum(e - s for s, e, _, _ in windows)
    overlap_free = all(s1 >= e0 for (_, e0, _, _), (s1, _, _, _) in zip(windows, windows[1:]))
    if overlap_free and not any(i.code == "SliceOutOfBounds" for i in issues):
        if covered != total:
            issues.append(
                ValidationIssue(
                    "SliceGap",
                    f"slices cover {covered} of {total} parameters; "
                    "the array must be covered exactly",
                )
            )

    # Shape chain, including the rank-1 output rule.
    if not any(i.layer is not None and i.code in ("ShapeMismatch", "UnsupportedLayer") for i in issues):
        try:
            shapes = infer_shapes(network)
        except (ShapeMismatch, NonIntegralPoolOutput) as exc:
            code = type(exc).__name__
            issues.append(ValidationIssue(code, str(exc)))
        else:
            if shapes[-1].rank != 1:
                issues.append(
                    ValidationIssue(
                        "ShapeMismatch",
                        f"last layer must produce a rank-1 shape, got {shapes[-1].dims}",
                        len(network.layers) - 1,
                    )
                )
    return issues
