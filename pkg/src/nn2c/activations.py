"""float32 activation functions shared by the interpreter and generated C.

The generated C must run freestanding (no libm), so sigmoid and tanh are
built on a private double-precision exponential: round-to-nearest power
split, degree-12 Taylor polynomial in Horner form, exact power-of-two
scaling. The emitted C transcribes exactly this sequence of IEEE-754
double operations, which makes compiled output bit-identical to the
interpreter on any strict-FP host. Accuracy is ~1 ulp in double, so the
float32 results are indistinguishable from the true functions at single
precision.

Inputs saturate to the exact float32 asymptote once the true function
rounds to it anyway (|x| >= 18 for sigmoid, 10 for tanh), keeping the
argument of the exponential small.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import maybe_jit

# 1/ln2 and a hi/lo split of ln2 (hi has zeroed low bits so k*LN2_HI is exact).
INV_LN2 = float.fromhex("0x1.71547652b82fep+0")
LN2_HI = float.fromhex("0x1.62e42fee00000p-1")
LN2_LO = float.fromhex("0x1.a39ef35793c76p-33")

# 1/12! .. 1/2!, 1, 1 — Horner order, highest degree first.
EXP_COEFFS = (
    float.fromhex("0x1.1eed8eff8d898p-29"),
    float.fromhex("0x1.ae64567f544e4p-26"),
    float.fromhex("0x1.27e4fb7789f5cp-22"),
    float.fromhex("0x1.71de3a556c734p-19"),
    float.fromhex("0x1.a01a01a01a01ap-16"),
    float.fromhex("0x1.a01a01a01a01ap-13"),
    float.fromhex("0x1.6c16c16c16c17p-10"),
    float.fromhex("0x1.1111111111111p-7"),
    float.fromhex("0x1.5555555555555p-5"),
    float.fromhex("0x1.5555555555555p-3"),
    0.5,
    1.0,
    1.0,
)

SIGMOID_CUTOFF = 18.0  # sigmoid(18) rounds to 1.0f
TANH_CUTOFF = 10.0  # tanh(10) rounds to 1.0f


@maybe_jit
def exp_d(x: float) -> float:
    """exp(x) over doubles for |x| <= ~60; mirrored verbatim in emitted C."""
    if x >= 0.0:
        k = int(x * INV_LN2 + 0.5)
    else:
        k = int(x * INV_LN2 - 0.5)
    r = x - k * LN2_HI
    r = r - k * LN2_LO
    acc = 0.0
    for c in EXP_COEFFS:
        acc = acc * r + c
    return math.ldexp(acc, k)


@maybe_jit
def sigmoid_f32(x):
    if x != x:  # NaN passes through untouched, exactly like the C runtime
        return x
    if x >= np.float32(SIGMOID_CUTOFF):
        return np.float32(1.0)
    if x <= np.float32(-SIGMOID_CUTOFF):
        return np.float32(0.0)
    z = exp_d(-float(x))
    return np.float32(1.0 / (1.0 + z))


@maybe_jit
def tanh_f32(x):
    if x != x:
        return x
    if x >= np.float32(TANH_CUTOFF):
        return np.float32(1.0)
    if x <= np.float32(-TANH_CUTOFF):
        return np.float32(-1.0)
    e = exp_d(-2.0 * float(x))
    return np.float32((1.0 - e) / (1.0 + e))


@maybe_jit
def relu_f32(x):
    if x > np.float32(0.0):
        return x
    return np.float32(0.0)
