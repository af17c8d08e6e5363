"""Ready-made networks used by the test suite, docs, and benchmarks.

`build_network` assigns parameter slices in layer order (weights before
biases) exactly like the interchange loader, so hand-built networks and
loaded ones are indistinguishable.
"""

from __future__ import annotations

import numpy as np

from .ir import (
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


def build_network(name, input_shape, layer_plan, weights=None, seed=None):
    """Assemble a validated NetworkIR from a compact layer plan.

    layer_plan entries:
        ("dense", units, activation)
        ("conv2d", (kh, kw), filters, (sh, sw), activation)
        ("avgpool2d" | "maxpool2d", (wh, ww), (sh, sw))
        ("flatten",)

    `weights` supplies the flat parameter array; when omitted, parameters
    are drawn uniformly from [-0.5, 0.5) with the given seed.
    """
    shape = TensorShape(tuple(input_shape))
    layers = []
    per_layer_params = []
    offset = 0
    for entry in layer_plan:
        kind = entry[0]
        if kind == "dense":
            _, units, act = entry
            in_count = shape.dims[0]
            w = ParamSlice(offset, in_count * units)
            b = ParamSlice(w.stop, units)
            offset = b.stop
            layer = DenseSpec(in_count, units, act, w, b)
        elif kind == "conv2d":
            _, (k_h, k_w), filters, (s_h, s_w), act = entry
            in_c = shape.dims[2]
            w = ParamSlice(offset, k_h * k_w * in_c * filters)
            b = ParamSlice(w.stop, filters)
            offset = b.stop
            layer = Conv2DSpec(k_h, k_w, in_c, filters, s_h, s_w, act, w, b)
        elif kind in ("avgpool2d", "maxpool2d"):
            _, (w_h, w_w), (s_h, s_w) = entry
            cls = AvgPool2DSpec if kind == "avgpool2d" else MaxPool2DSpec
            layer = cls(w_h, w_w, s_h, s_w)
        elif kind == "flatten":
            layer = FlattenSpec()
        else:
            raise ValueError(f"unknown layer plan entry {entry!r}")
        shape = _layer_output_shape(layer, shape)
        layers.append(layer)
        per_layer_params.append(layer.weight_slice.length + layer.bias_slice.length)

    total = sum(per_layer_params)
    if weights is None:
        rng = np.random.default_rng(seed)
        weights = (rng.random(total, dtype=np.float32) - 0.5).astype(np.float32)
    weights = np.asarray(weights, dtype=np.float32).reshape(-1)
    if len(weights) != total:
        raise ValueError(f"need {total} parameters, got {len(weights)}")
    net = NetworkIR(name, TensorShape(tuple(input_shape)), tuple(layers), weights)
    return net.require_valid()


def xor_net() -> NetworkIR:
    """2-2-1 ReLU network computing XOR exactly on {0,1} inputs.

    Hidden pre-activations are (x1+x2, x1+x2-1); the output is h1 - 2*h2,
    which is 0, 1, 1, 0 over the truth table. All values are exactly
    representable in both float32 and Q16.16.
    """
    weights = np.array(
        [
            1.0, 1.0,  # w[in=0] -> hidden
            1.0, 1.0,  # w[in=1] -> hidden
            0.0, -1.0,  # hidden biases
            1.0, -2.0,  # hidden -> out
            0.0,  # out bias
        ],
        dtype=np.float32,
    )
    return build_network(
        "xor",
        (2,),
        [("dense", 2, "relu"), ("dense", 1, "linear")],
        weights=weights,
    )


def lenet5_net(seed: int = 2024) -> NetworkIR:
    """LeNet-5-shaped CNN on 32x32x1 input: 61,706 parameters.

    conv 5x5 1->6, avgpool 2x2, conv 5x5 6->16, avgpool 2x2, flatten,
    dense 400->120, dense 120->84, dense 84->10. Weights are random; the
    fixture pins the architecture and its statistics, not a trained model.
    """
    rng = np.random.default_rng(seed)
    weights = ((rng.random(61706, dtype=np.float32) - 0.5) * 0.25).astype(np.float32)
    return build_network(
        "lenet5",
        (32, 32, 1),
        [
            ("conv2d", (5, 5), 6, (1, 1), "relu"),
            ("avgpool2d", (2, 2), (2, 2)),
            ("conv2d", (5, 5), 16, (1, 1), "relu"),
            ("avgpool2d", (2, 2), (2, 2)),
            ("flatten",),
            ("dense", 120, "relu"),
            ("dense", 84, "relu"),
            ("dense", 10, "linear"),
        ],
        weights=weights,
    )


def f110_net(seed: int = 110) -> NetworkIR:
    """Stand-in for a published track-following controller: 24,320 parameters.

    The original's layer sizes were never published; this 190-126-2
    sigmoid MLP is reconstructed to match the reported connection count
    only and carries random weights. Treat the architecture as
    illustrative, not authoritative.
    """
    rng = np.random.default_rng(seed)
    weights = ((rng.random(24320, dtype=np.float32) - 0.5) * 0.2).astype(np.float32)
    return build_network(
        "f110",
        (190,),
        [("dense", 126, "sigmoid"), ("dense", 2, "sigmoid")],
        weights=weights,
    )


def identity_net() -> NetworkIR:
    """dense 1->1 with w=1, b=0: the identity function."""
    return build_network(
        "ident",
        (1,),
        [("dense", 1, "linear")],
        weights=np.array([1.0, 0.0], dtype=np.float32),
    )
