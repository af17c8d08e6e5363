"""Reference executor for validated networks, in float32 and fix16 modes.

This is the functional oracle for generated C: loop structure and
accumulation order match the emitted code exactly, so fix16 results are
bit-identical and float32 results are bit-identical on strict-IEEE hosts.
Arithmetic happens at working precision (float32 accumulators, not
double), because the oracle models the target, not the training
framework.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import ModeMismatch, ShapeMismatch
from .fixedpoint import FX_MAX, FX_MIN, fx_from_real, fx_from_real_array
from .ir import (
    AvgPool2DSpec,
    Conv2DSpec,
    DenseSpec,
    FlattenSpec,
    MaxPool2DSpec,
    NetworkIR,
    infer_shapes,
)

MODES = ("float32", "fix16")


class Executor:
    """Run context: a validated network plus preallocated activation buffers.

    Buffers are reused across invocations without reallocation; outputs are
    copied out, so repeated runs are bit-reproducible. One Executor is
    single-threaded; distinct Executors may share the same NetworkIR.

    After every `run` the executed multiply-accumulate count is available
    as `last_mac_count` (the kernels count each MAC they perform; control
    flow is input-independent, so the count is a function of the
    architecture alone).
    """

    def __init__(self, network: NetworkIR, mode: str = "float32"):
        if mode not in MODES:
            raise ModeMismatch(f"unknown mode {mode!r}")
        network.require_valid()
        self.network = network
        self.mode = mode
        self.shapes = infer_shapes(network)
        self.input_count = network.input_shape.count
        self.output_count = self.shapes[-1].count
        self.last_mac_count: int | None = None

        n_layers = len(network.layers)
        kinds = np.zeros(n_layers, dtype=np.int64)
        acts = np.zeros(n_layers, dtype=np.int64)
        params = np.zeros((n_layers, _kernels.PARAM_WIDTH), dtype=np.int64)
        recips_f32 = np.zeros(n_layers, dtype=np.float32)
        recips_raw = np.zeros(n_layers, dtype=np.int64)

        in_shape = network.input_shape
        for li, layer in enumerate(network.layers):
            out_shape = self.shapes[li]
            kinds[li] = _kernels.KIND_CODES[layer.kind]
            acts[li] = _kernels.ACT_CODES[layer.activation]
            if isinstance(layer, DenseSpec):
                params[li, :4] = (
                    layer.in_count,
                    layer.out_count,
                    layer.weight_slice.start,
                    layer.bias_slice.start,
                )
            elif isinstance(layer, Conv2DSpec):
                params[li, :12] = (
                    in_shape.dims[0],
                    in_shape.dims[1],
                    in_shape.dims[2],
                    out_shape.dims[0],
                    out_shape.dims[1],
                    out_shape.dims[2],
                    layer.kernel_h,
                    layer.kernel_w,
                    layer.stride_h,
                    layer.stride_w,
                    layer.weight_slice.start,
                    layer.bias_slice.start,
                )
            elif isinstance(layer, (AvgPool2DSpec, MaxPool2DSpec)):
                params[li, :9] = (
                    in_shape.dims[0],
                    in_shape.dims[1],
                    in_shape.dims[2],
                    out_shape.dims[0],
                    out_shape.dims[1],
                    layer.window_h,
                    layer.window_w,
                    layer.stride_h,
                    layer.stride_w,
                )
                if isinstance(layer, AvgPool2DSpec):
                    n = layer.window_h * layer.window_w
                    recips_f32[li] = np.float32(1.0 / n)
                    recips_raw[li] = fx_from_real(1.0 / n)
            elif isinstance(layer, FlattenSpec):
                params[li, 0] = in_shape.count
            in_shape = out_shape

        self._kinds = kinds
        self._acts = acts
        self._params = params
        self._recips_f32 = recips_f32
        self._recips_raw = recips_raw

        buf_count = max((s.count for s in self.shapes[:-1]), default=1)
        if self.mode == "float32":
            self._weights = np.ascontiguousarray(network.parameters, dtype=np.float32)
            self._buf_a = np.zeros(buf_count, dtype=np.float32)
            self._buf_b = np.zeros(buf_count, dtype=np.float32)
            self._out = np.zeros(self.output_count, dtype=np.float32)
        else:
            self._weights = fx_from_real_array(network.parameters)
            self._buf_a = np.zeros(buf_count, dtype=np.int64)
            self._buf_b = np.zeros(buf_count, dtype=np.int64)
            self._out = np.zeros(self.output_count, dtype=np.int64)

    def _coerce_input(self, x) -> np.ndarray:
        arr = np.asarray(x)
        if self.mode == "fix16":
            if not np.issubdtype(arr.dtype, np.integer):
                raise ModeMismatch(
                    "fix16 execution takes raw Q16.16 integers; got "
                    f"dtype {arr.dtype} (convert with fx_from_real)"
                )
            flat = np.ascontiguousarray(arr.reshape(-1), dtype=np.int64)
            if flat.size and (flat.max() > FX_MAX or flat.min() < FX_MIN):
                raise ModeMismatch("fix16 input raw value outside int32 range")
        else:
            if arr.dtype == np.float64 or np.issubdtype(arr.dtype, np.integer):
                arr = arr.astype(np.float32)
            if arr.dtype != np.float32:
                raise ModeMismatch(f"float32 execution cannot take dtype {arr.dtype}")
            flat = np.ascontiguousarray(arr.reshape(-1), dtype=np.float32)

        dims = self.network.input_shape.dims
        if arr.shape != dims and arr.shape != (self.input_count,):
            raise ShapeMismatch(
                f"input shape {arr.shape} does not match network input {dims}"
            )
        return flat

    def run(self, x) -> np.ndarray:
        """Execute one inference; returns a fresh rank-1 output array."""
        flat = self._coerce_input(x)
        if self.mode == "float32":
            macs = _kernels.run_f32(
                self._kinds, self._acts, self._params, self._recips_f32,
                self._weights, flat, self._buf_a, self._buf_b, self._out,
            )
        else:
            macs = _kernels.run_fx(
                self._kinds, self._acts, self._params, self._recips_raw,
                self._weights, flat, self._buf_a, self._buf_b, self._out,
            )
        self.last_mac_count = int(macs)
        return self._out.copy()

    def run_batch(self, xs) -> np.ndarray:
        """Map `run` over the leading axis; stateless across elements."""
        outs = [self.run(x) for x in xs]
        if not outs:
            dtype = np.float32 if self.mode == "float32" else np.int64
            return np.zeros((0, self.output_count), dtype=dtype)
        return np.stack(outs)


def run(network: NetworkIR, x, mode: str = "float32") -> np.ndarray:
    """One-shot convenience wrapper; tests and the CLI mostly use Executor."""
    return Executor(network, mode).run(x)


def run_batch(network: NetworkIR, xs, mode: str = "float32") -> np.ndarray:
    return Executor(network, mode).run_batch(xs)
