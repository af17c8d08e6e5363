"""Whole-network execution kernels over a flat layer program.

The interpreter lowers a network to parallel arrays (layer kinds,
activation codes, integer parameters, pooling reciprocals) so one kernel
can execute any supported architecture without Python-level dispatch.
Loop nests and accumulation order here are normative: dense sums ascend
the input index, convolution accumulates (ky, kx, in_ch) ascending, and
the generated C mirrors them statement for statement. Both kernels
return the number of multiply-accumulate operations actually executed.
"""

from __future__ import annotations

import numpy as np

from ._accel import maybe_jit
from .activations import relu_f32, sigmoid_f32, tanh_f32
from .fixedpoint import fx_add, fx_mul, fx_relu, fx_sigmoid, fx_tanh

KIND_DENSE = 0
KIND_CONV2D = 1
KIND_AVGPOOL2D = 2
KIND_MAXPOOL2D = 3
KIND_FLATTEN = 4

ACT_LINEAR = 0
ACT_RELU = 1
ACT_SIGMOID = 2
ACT_TANH = 3

KIND_CODES = {
    "dense": KIND_DENSE,
    "conv2d": KIND_CONV2D,
    "avgpool2d": KIND_AVGPOOL2D,
    "maxpool2d": KIND_MAXPOOL2D,
    "flatten": KIND_FLATTEN,
}

ACT_CODES = {
    "linear": ACT_LINEAR,
    "relu": ACT_RELU,
    "sigmoid": ACT_SIGMOID,
    "tanh": ACT_TANH,
}

PARAM_WIDTH = 12


@maybe_jit
def _act_f32(v, act):
    if act == ACT_RELU:
        return relu_f32(v)
    if act == ACT_SIGMOID:
        return sigmoid_f32(v)
    if act == ACT_TANH:
        return tanh_f32(v)
    return v


@maybe_jit
def _act_fx(v, act):
    if act == ACT_RELU:
        return fx_relu(v)
    if act == ACT_SIGMOID:
        return fx_sigmoid(v)
    if act == ACT_TANH:
        return fx_tanh(v)
    return v


@maybe_jit
def run_f32(kinds, acts, params, recips, weights, x, buf_a, buf_b, out):
    macs = 0
    n_layers = kinds.shape[0]
    src = x
    for li in range(n_layers):
        if li == n_layers - 1:
            dst = out
        elif li % 2 == 0:
            dst = buf_a
        else:
            dst = buf_b
        kind = kinds[li]
        act = acts[li]
        if kind == KIND_DENSE:
            n_in = params[li, 0]
            n_out = params[li, 1]
            w_off = params[li, 2]
            b_off = params[li, 3]
            for j in range(n_out):
                acc = weights[b_off + j]
                for i in range(n_in):
                    acc = acc + src[i] * weights[w_off + i * n_out + j]
                    macs += 1
                dst[j] = _act_f32(acc, act)
        elif kind == KIND_CONV2D:
            in_h = params[li, 0]
            in_w = params[li, 1]
            in_c = params[li, 2]
            out_h = params[li, 3]
            out_w = params[li, 4]
            out_c = params[li, 5]
            k_h = params[li, 6]
            k_w = params[li, 7]
            s_h = params[li, 8]
            s_w = params[li, 9]
            w_off = params[li, 10]
            b_off = params[li, 11]
            for oy in range(out_h):
                for ox in range(out_w):
                    for oc in range(out_c):
                        acc = weights[b_off + oc]
                        for ky in range(k_h):
                            for kx in range(k_w):
                                for ic in range(in_c):
                                    acc = acc + (
                                        src[((oy * s_h + ky) * in_w + (ox * s_w + kx)) * in_c + ic]
                                        * weights[w_off + ((ky * k_w + kx) * in_c + ic) * out_c + oc]
                                    )
                                    macs += 1
                        dst[(oy * out_w + ox) * out_c + oc] = _act_f32(acc, act)
        elif kind == KIND_AVGPOOL2D:
            in_w = params[li, 1]
            ch = params[li, 2]
            out_h = params[li, 3]
            out_w = params[li, 4]
            w_h = params[li, 5]
            w_w = params[li, 6]
            s_h = params[li, 7]
            s_w = params[li, 8]
            recip = recips[li]
            for oy in range(out_h):
                for ox in range(out_w):
                    for c in range(ch):
                        s = np.float32(0.0)
                        for ky in range(w_h):
                            for kx in range(w_w):
                                s = s + src[((oy * s_h + ky) * in_w + (ox * s_w + kx)) * ch + c]
                        dst[(oy * out_w + ox) * ch + c] = s * recip
        elif kind == KIND_MAXPOOL2D:
            in_w = params[li, 1]
            ch = params[li, 2]
            out_h = params[li, 3]
            out_w = params[li, 4]
            w_h = params[li, 5]
            w_w = params[li, 6]
            s_h = params[li, 7]
            s_w = params[li, 8]
            for oy in range(out_h):
                for ox in range(out_w):
                    for c in range(ch):
                        m = src[(oy * s_h * in_w + ox * s_w) * ch + c]
                        for ky in range(w_h):
                            for kx in range(w_w):
                                v = src[((oy * s_h + ky) * in_w + (ox * s_w + kx)) * ch + c]
                                if v > m:
                                    m = v
                        dst[(oy * out_w + ox) * ch + c] = m
        else:  # KIND_FLATTEN: row-major layouts are already flat
            count = params[li, 0]
            for i in range(count):
                dst[i] = src[i]
        src = dst
    return macs


@maybe_jit
def run_fx(kinds, acts, params, recips_raw, weights, x, buf_a, buf_b, out):
    macs = 0
    n_layers = kinds.shape[0]
    src = x
    for li in range(n_layers):
        if li == n_layers - 1:
            dst = out
        elif li % 2 == 0:
            dst = buf_a
        else:
            dst = buf_b
        kind = kinds[li]
        act = acts[li]
        if kind == KIND_DENSE:
            n_in = params[li, 0]
            n_out = params[li, 1]
            w_off = params[li, 2]
            b_off = params[li, 3]
            for j in range(n_out):
                acc = weights[b_off + j]
                for i in range(n_in):
                    acc = fx_add(acc, fx_mul(src[i], weights[w_off + i * n_out + j]))
                    macs += 1
                dst[j] = _act_fx(acc, act)
        elif kind == KIND_CONV2D:
            in_h = params[li, 0]
            in_w = params[li, 1]
            in_c = params[li, 2]
            out_h = params[li, 3]
            out_w = params[li, 4]
            out_c = params[li, 5]
            k_h = params[li, 6]
            k_w = params[li, 7]
            s_h = params[li, 8]
            s_w = params[li, 9]
            w_off = params[li, 10]
            b_off = params[li, 11]
            for oy in range(out_h):
                for ox in range(out_w):
                    for oc in range(out_c):
                        acc = weights[b_off + oc]
                        for ky in range(k_h):
                            for kx in range(k_w):
                                for ic in range(in_c):
                                    acc = fx_add(
                                        acc,
                                        fx_mul(
                                            src[((oy * s_h + ky) * in_w + (ox * s_w + kx)) * in_c + ic],
                                            weights[w_off + ((ky * k_w + kx) * in_c + ic) * out_c + oc],
                                        ),
                                    )
                                    macs += 1
                        dst[(oy * out_w + ox) * out_c + oc] = _act_fx(acc, act)
        elif kind == KIND_AVGPOOL2D:
            in_w = params[li, 1]
            ch = params[li, 2]
            out_h = params[li, 3]
            out_w = params[li, 4]
            w_h = params[li, 5]
            w_w = params[li, 6]
            s_h = params[li, 7]
            s_w = params[li, 8]
            recip = recips_raw[li]
            for oy in range(out_h):
                for ox in range(out_w):
                    for c in range(ch):
                        s = 0
                        for ky in range(w_h):
                            for kx in range(w_w):
                                s = fx_add(s, src[((oy * s_h + ky) * in_w + (ox * s_w + kx)) * ch + c])
                        dst[(oy * out_w + ox) * ch + c] = fx_mul(s, recip)
        elif kind == KIND_MAXPOOL2D:
            in_w = params[li, 1]
            ch = params[li, 2]
            out_h = params[li, 3]
            out_w = params[li, 4]
            w_h = params[li, 5]
            w_w = params[li, 6]
            s_h = params[li, 7]
            s_w = params[li, 8]
            for oy in range(out_h):
                for ox in range(out_w):
                    for c in range(ch):
                        m = src[(oy * s_h * in_w + ox * s_w) * ch + c]
                        for ky in range(w_h):
                            for kx in range(w_w):
                                v = src[((oy * s_h + ky) * in_w + (ox * s_w + kx)) * ch + c]
                                if v > m:
                                    m = v
                        dst[(oy * out_w + ox) * ch + c] = m
        else:  # KIND_FLATTEN
            count = params[li, 0]
            for i in range(count):
                dst[i] = src[i]
        src = dst
    return macs
