"""Optional numba acceleration for the scalar ops and execution kernels.

Everything decorated with `maybe_jit` must be written so that the plain
Python execution and the jitted execution are bit-identical; setting
NN2C_DISABLE_JIT=1 (or running without numba) falls back to the pure
interpretation of the very same code.
"""

import os

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

JIT_ENABLED = _HAVE_NUMBA and os.environ.get("NN2C_DISABLE_JIT") != "1"


def maybe_jit(fn):
    if JIT_ENABLED:
        return _njit(cache=True)(fn)
    return fn
