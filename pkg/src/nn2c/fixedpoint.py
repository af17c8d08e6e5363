"""Q16.16 saturating fixed-point arithmetic and table-driven activations.

All values are raw signed 32-bit integers scaled by 2^16, passed around as
plain Python ints. Arithmetic saturates at the int32 bounds instead of
wrapping; `fx_mul` rounds half-up on the 16 discarded bits. The sigmoid
and tanh tables defined here are the single source of truth: the code
generator emits them verbatim into the C runtime header, so the
interpreter's fixed mode and compiled output agree bit for bit.

The arithmetic functions are deliberately written in numba-compilable
form; the execution kernels jit exactly these definitions.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import maybe_jit

FX_ONE = 1 << 16
FX_MAX = 2**31 - 1
FX_MIN = -(2**31)

# Value range of the representation, as reals.
FX_MAX_REAL = FX_MAX / FX_ONE
FX_MIN_REAL = FX_MIN / FX_ONE

# Sigmoid is tabulated on [-8, 8], tanh on [-4, 4]; 257 entries each,
# linearly interpolated, clamped to the asymptote outside the range.
SIGMOID_RANGE = 8
TANH_RANGE = 4
TABLE_SIZE = 257

_SIG_LO = -SIGMOID_RANGE * FX_ONE
_SIG_HI = SIGMOID_RANGE * FX_ONE
_SIG_SHIFT = 12  # (2 * 8 * 65536) / 256 = 2^12 raw units per cell
_TANH_LO = -TANH_RANGE * FX_ONE
_TANH_HI = TANH_RANGE * FX_ONE
_TANH_SHIFT = 11


def fx_from_real(x: float) -> int:
    """Nearest representable value, ties away from zero; saturates silently.

    NaN maps to 0 by convention (no error path exists for conversion).
    """
    x = float(x)
    if math.isnan(x):
        return 0
    r = x * 65536.0
    if r >= FX_MAX:
        return FX_MAX
    if r <= FX_MIN:
        return FX_MIN
    if r >= 0.0:
        return int(math.floor(r + 0.5))
    return int(math.ceil(r - 0.5))


def fx_to_real(raw: int) -> float:
    return raw / 65536.0


def fx_from_real_array(x: np.ndarray) -> np.ndarray:
    """Vectorized `fx_from_real` over a float array; returns int64 raw values."""
    r = np.asarray(x, dtype=np.float64) * 65536.0
    rounded = np.where(r >= 0.0, np.floor(r + 0.5), np.ceil(r - 0.5))
    rounded = np.where(np.isnan(rounded), 0.0, rounded)
    return np.clip(rounded, FX_MIN, FX_MAX).astype(np.int64)


def fx_sat(v: int) -> int:
    if v > FX_MAX:
        return FX_MAX
    if v < FX_MIN:
        return FX_MIN
    return v


# The arithmetic bodies are self-contained (saturation inlined) so that the
# execution kernels can jit each one as-is.

@maybe_jit
def fx_add(a: int, b: int) -> int:
    v = a + b
    if v > 2147483647:
        return 2147483647
    if v < -2147483648:
        return -2147483648
    return v


@maybe_jit
def fx_sub(a: int, b: int) -> int:
    v = a - b
    if v > 2147483647:
        return 2147483647
    if v < -2147483648:
        return -2147483648
    return v


@maybe_jit
def fx_mul(a: int, b: int) -> int:
    # 64-bit intermediate; round half-up on the discarded 16 bits.
    v = (a * b + 0x8000) >> 16
    if v > 2147483647:
        return 2147483647
    if v < -2147483648:
        return -2147483648
    return v


@maybe_jit
def fx_relu(a: int) -> int:
    return a if a > 0 else 0


def _build_table(fn, lo: float, hi: float) -> np.ndarray:
    xs = [lo + (hi - lo) * k / (TABLE_SIZE - 1) for k in range(TABLE_SIZE)]
    return np.array([fx_from_real(fn(x)) for x in xs], dtype=np.int64)


SIGMOID_TABLE = _build_table(lambda x: 1.0 / (1.0 + math.exp(-x)), -8.0, 8.0)
TANH_TABLE = _build_table(math.tanh, -4.0, 4.0)


@maybe_jit
def fx_sigmoid(x: int) -> int:
    """Table lookup with linear interpolation; clamps to 0 / ONE outside [-8, 8]."""
    if x < _SIG_LO:
        return 0
    if x > _SIG_HI:
        return FX_ONE
    t = x - _SIG_LO
    idx = t >> _SIG_SHIFT
    frac = t & ((1 << _SIG_SHIFT) - 1)
    base = int(SIGMOID_TABLE[idx])
    if frac == 0:
        return base
    return base + (((int(SIGMOID_TABLE[idx + 1]) - base) * frac) >> _SIG_SHIFT)


@maybe_jit
def fx_tanh(x: int) -> int:
    """Table lookup with linear interpolation; clamps to ±ONE outside [-4, 4]."""
    if x < _TANH_LO:
        return -FX_ONE
    if x > _TANH_HI:
        return FX_ONE
    t = x - _TANH_LO
    idx = t >> _TANH_SHIFT
    frac = t & ((1 << _TANH_SHIFT) - 1)
    base = int(TANH_TABLE[idx])
    if frac == 0:
        return base
    return base + (((int(TANH_TABLE[idx + 1]) - base) * frac) >> _TANH_SHIFT)
