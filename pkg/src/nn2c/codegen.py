"""Emission of standalone, statically analyzable C for one network.

The output is deliberately rigid: every loop bound is an integer literal
derived from the shapes, there is no heap, no recursion, and no call
leaves the emitted unit. Loop nests and accumulation order mirror the
interpreter kernels statement for statement, which is what makes the
differential tests bit-exact in fix16 mode (and on strict-IEEE hosts in
float32 mode; compile with -ffp-contract=off on FMA targets).

Emission is a pure function of (network, config): identical inputs give
byte-identical text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import activations, fixedpoint
from .errors import CodegenError
from .fixedpoint import fx_from_real
from .ir import (
    AvgPool2DSpec,
    Conv2DSpec,
    DenseSpec,
    FlattenSpec,
    MaxPool2DSpec,
    NetworkIR,
    TensorShape,
    infer_shapes,
)

GENERATOR_TAG = "Generated by nn2c; do not edit."

RUNTIME_HEADER_NAME = "tp_runtime.h"

MODES = ("float32", "fix16")

_C_KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool _Complex _Imaginary""".split()
)

_ACT_FN = {
    "fix16": {"relu": "fx_relu", "sigmoid": "fx_sigmoid", "tanh": "fx_tanh"},
    "float32": {"relu": "tp_relu", "sigmoid": "tp_sigmoid", "tanh": "tp_tanh"},
}


@dataclass(frozen=True)
class CodegenConfig:
    """Emission options; `prefix` defaults to the sanitized network name."""

    mode: str = "fix16"
    prefix: str | None = None
    emit_runtime_header: bool = True


@dataclass(frozen=True)
class EmittedUnit:
    """The generated translation units, keyed by their output file names."""

    prefix: str
    mode: str
    header: str
    source: str
    weights_source: str
    runtime_header: str | None = field(default=None)

    def files(self) -> dict[str, str]:
        out = {
            f"{self.prefix}.h": self.header,
            f"{self.prefix}.c": self.source,
            f"{self.prefix}_weights.c": self.weights_source,
        }
        if self.runtime_header is not None:
            out[RUNTIME_HEADER_NAME] = self.runtime_header
        return out


def sanitize_prefix(name: str) -> str:
    """Reduce a network name to a valid C identifier; errors on collisions."""
    prefix = re.sub(r"[^0-9A-Za-z_]", "_", name)
    if not prefix:
        raise CodegenError(f"name {name!r} sanitizes to an empty identifier")
    if prefix[0].isdigit():
        prefix = "n" + prefix
    if prefix in _C_KEYWORDS or prefix == "tp_runtime":
        raise CodegenError(f"prefix {prefix!r} collides with a reserved identifier")
    return prefix


def _f32_literal(value) -> str:
    """Exact C literal for a float32 value (hex float, so parsing is lossless)."""
    v = float(np.float32(value))
    if not np.isfinite(v):
        raise CodegenError(f"non-finite weight {v!r} cannot be emitted in float32 mode")
    if v == 0.0:
        return "-0.0f" if np.signbit(np.float32(value)) else "0.0f"
    text = float.hex(v)
    mant, exp = text.split("p")
    mant = mant.rstrip("0").rstrip(".")  # trim the double-width zero tail
    if mant in ("0x1", "-0x1"):
        mant += ".0"
    return f"{mant}p{exp}f"


def _d_literal(value: float) -> str:
    if value == 0.0:
        return "0.0"
    return float.hex(float(value))


def _array_literal(values: list[str], per_line: int = 8) -> str:
    lines = []
    for i in range(0, len(values), per_line):
        lines.append("    " + ", ".join(values[i : i + per_line]) + ",")
    return "\n".join(lines)


def emit_runtime_header(mode: str) -> str:
    """The shared runtime: fix16 ops + tables, or float32 activations.

    Table contents come straight from the fixedpoint module, so the C and
    the interpreter share one source of truth.
    """
    if mode not in MODES:
        raise CodegenError(f"unsupported mode {mode!r}")
    lines = [
        f"/* Numeric runtime for generated networks ({mode}). {GENERATOR_TAG} */",
        "#ifndef TP_RUNTIME_H",
        "#define TP_RUNTIME_H",
        "",
        "#include <stdint.h>",
        "",
    ]
    if mode == "fix16":
        sig = _array_literal([str(int(v)) for v in fixedpoint.SIGMOID_TABLE])
        tnh = _array_literal([str(int(v)) for v in fixedpoint.TANH_TABLE])
        lines += [
            "typedef int32_t fix16_t;",
            "",
            "#define FX_ONE 65536",
            "",
            "static inline fix16_t fx_sat(int64_t v)",
            "{",
            "    if (v > 2147483647LL) {",
            "        return 2147483647;",
            "    }",
            "    if (v < -2147483648LL) {",
            "        return (-2147483647 - 1);",
            "    }",
            "    return (fix16_t)v;",
            "}",
            "",
            "static inline fix16_t fx_add(fix16_t a, fix16_t b)",
            "{",
            "    return fx_sat((int64_t)a + (int64_t)b);",
            "}",
            "",
            "static inline fix16_t fx_sub(fix16_t a, fix16_t b)",
            "{",
            "    return fx_sat((int64_t)a - (int64_t)b);",
            "}",
            "",
            "static inline fix16_t fx_mul(fix16_t a, fix16_t b)",
            "{",
            "    /* round half-up on the 16 discarded bits */",
            "    return fx_sat(((int64_t)a * (int64_t)b + 32768LL) >> 16);",
            "}",
            "",
            "static inline fix16_t fx_relu(fix16_t a)",
            "{",
            "    return (a > 0) ? a : 0;",
            "}",
            "",
            "static const fix16_t FX_SIGMOID_TABLE[257] = {",
            sig,
            "};",
            "",
            "static const fix16_t FX_TANH_TABLE[257] = {",
            tnh,
            "};",
            "",
            "/* 257-entry tables over [-8, 8] (sigmoid) and [-4, 4] (tanh),",
            "   linear interpolation, clamped to the asymptote outside. */",
            "static inline fix16_t fx_sigmoid(fix16_t x)",
            "{",
            "    int32_t t;",
            "    int32_t idx;",
            "    int32_t frac;",
            "    int32_t base;",
            "    if (x < -524288) {",
            "        return 0;",
            "    }",
            "    if (x > 524288) {",
            "        return FX_ONE;",
            "    }",
            "    t = x + 524288;",
            "    idx = t >> 12;",
            "    frac = t & 4095;",
            "    base = FX_SIGMOID_TABLE[idx];",
            "    if (frac == 0) {",
            "        return base;",
            "    }",
            "    return base + (((FX_SIGMOID_TABLE[idx + 1] - base) * frac) >> 12);",
            "}",
            "",
            "static inline fix16_t fx_tanh(fix16_t x)",
            "{",
            "    int32_t t;",
            "    int32_t idx;",
            "    int32_t frac;",
            "    int32_t base;",
            "    if (x < -262144) {",
            "        return -FX_ONE;",
            "    }",
            "    if (x > 262144) {",
            "        return FX_ONE;",
            "    }",
            "    t = x + 262144;",
            "    idx = t >> 11;",
            "    frac = t & 2047;",
            "    base = FX_TANH_TABLE[idx];",
            "    if (frac == 0) {",
            "        return base;",
            "    }",
            "    return base + (((FX_TANH_TABLE[idx + 1] - base) * frac) >> 11);",
            "}",
        ]
    else:
        coeffs = _array_literal([_d_literal(c) for c in activations.EXP_COEFFS], per_line=3)
        lines += [
            "/* Activations for float mode, libm-free: exp is a degree-12",
            "   polynomial after power-of-two range reduction, evaluated in",
            "   double. The reference interpreter mirrors these operations",
            "   exactly, so results match bit for bit under strict IEEE-754",
            "   evaluation. */",
            "",
            "static const double TP_EXP_COEFFS[13] = {",
            coeffs,
            "};",
            "",
            "static inline double tp_ldexp(double v, int k)",
            "{",
            "    union { double d; uint64_t u; } s;",
            "    s.u = (uint64_t)(1023 + k) << 52;",
            "    return v * s.d;",
            "}",
            "",
            "static inline double tp_exp(double x)",
            "{",
            "    int k;",
            "    double r;",
            "    double acc;",
            f"    if (x >= 0.0) {{",
            f"        k = (int)(x * {_d_literal(activations.INV_LN2)} + 0.5);",
            "    } else {",
            f"        k = (int)(x * {_d_literal(activations.INV_LN2)} - 0.5);",
            "    }",
            f"    r = x - (double)k * {_d_literal(activations.LN2_HI)};",
            f"    r = r - (double)k * {_d_literal(activations.LN2_LO)};",
            "    acc = 0.0;",
            "    for (int i = 0; i < 13; i++) {",
            "        acc = acc * r + TP_EXP_COEFFS[i];",
            "    }",
            "    return tp_ldexp(acc, k);",
            "}",
            "",
            "static inline float tp_sigmoid(float x)",
            "{",
            "    double z;",
            "    if (x != x) {",
            "        return x;",
            "    }",
            "    if (x >= 18.0f) {",
            "        return 1.0f;",
            "    }",
            "    if (x <= -18.0f) {",
            "        return 0.0f;",
            "    }",
            "    z = tp_exp(-(double)x);",
            "    return (float)(1.0 / (1.0 + z));",
            "}",
            "",
            "static inline float tp_tanh(float x)",
            "{",
            "    double e;",
            "    if (x != x) {",
            "        return x;",
            "    }",
            "    if (x >= 10.0f) {",
            "        return 1.0f;",
            "    }",
            "    if (x <= -10.0f) {",
            "        return -1.0f;",
            "    }",
            "    e = tp_exp(-2.0 * (double)x);",
            "    return (float)((1.0 - e) / (1.0 + e));",
            "}",
            "",
            "static inline float tp_relu(float x)",
            "{",
            "    return (x > 0.0f) ? x : 0.0f;",
            "}",
        ]
    lines += ["", "#endif /* TP_RUNTIME_H */", ""]
    return "\n".join(lines)


def _ctype(mode: str) -> str:
    return "int32_t" if mode == "fix16" else "float"


def _emit_header(network: NetworkIR, prefix: str, mode: str) -> str:
    shapes = infer_shapes(network)
    in_n = network.input_shape.count
    out_n = shapes[-1].count
    guard = f"{prefix.upper()}_H"
    t = _ctype(mode)
    value_doc = (
        "Values are raw Q16.16 fixed point (value = raw / 65536)."
        if mode == "fix16"
        else "Values are IEEE-754 binary32."
    )
    return "\n".join(
        [
            f"/* Inference entry point for network \"{network.name}\" ({mode}). {GENERATOR_TAG} */",
            f"#ifndef {guard}",
            f"#define {guard}",
            "",
            "#include <stdint.h>",
            "",
            f"#define {prefix.upper()}_IN_N {in_n}",
            f"#define {prefix.upper()}_OUT_N {out_n}",
            "",
            f"/* {value_doc}",
            "   Not reentrant: one invocation at a time per process (the layer",
            "   chain runs through shared static activation buffers). */",
            f"void {prefix}_run(const {t} in[{in_n}], {t} out[{out_n}]);",
            "",
            f"#endif /* {guard} */",
            "",
        ]
    )


def _emit_weights(network: NetworkIR, prefix: str, mode: str) -> str:
    t = _ctype(mode)
    lines = [
        f"/* Parameters for network \"{network.name}\" ({mode}). {GENERATOR_TAG} */",
        "#include <stdint.h>",
        "",
    ]
    for i, layer in enumerate(network.layers):
        if layer.weight_slice.length == 0:
            continue
        w = network.weights_of(i)
        b = network.biases_of(i)
        if mode == "fix16":
            w_lit = [str(fx_from_real(float(v))) for v in w]
            b_lit = [str(fx_from_real(float(v))) for v in b]
        else:
            w_lit = [_f32_literal(v) for v in w]
            b_lit = [_f32_literal(v) for v in b]
        lines += [
            f"const {t} {prefix}_w{i}[{len(w_lit)}] = {{",
            _array_literal(w_lit),
            "};",
            "",
            f"const {t} {prefix}_b{i}[{len(b_lit)}] = {{",
            _array_literal(b_lit),
            "};",
            "",
        ]
    return "\n".join(lines)


class _Writer:
    def __init__(self):
        self.lines: list[str] = []
        self.depth = 0

    def line(self, text: str = ""):
        self.lines.append(("    " * self.depth + text) if text else "")

    def open(self, text: str):
        self.line(text)
        self.line("{")
        self.depth += 1

    def close(self):
        self.depth -= 1
        self.line("}")

    def for_loop(self, var: str, bound: int):
        self.open(f"for (int {var} = 0; {var} < {bound}; {var}++)")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _store_expr(mode: str, activation: str, expr: str) -> str:
    fn = _ACT_FN[mode].get(activation)
    return f"{fn}({expr})" if fn else expr


def _emit_dense(w: _Writer, layer: DenseSpec, prefix: str, idx: int, mode: str):
    n_in, n_out = layer.in_count, layer.out_count
    acc_t = "fix16_t" if mode == "fix16" else "float"
    w.for_loop("j", n_out)
    w.line(f"{acc_t} acc = {prefix}_b{idx}[j];")
    w.for_loop("i", n_in)
    if mode == "fix16":
        w.line(f"acc = fx_add(acc, fx_mul(in[i], {prefix}_w{idx}[i * {n_out} + j]));")
    else:
        w.line(f"acc = acc + in[i] * {prefix}_w{idx}[i * {n_out} + j];")
    w.close()
    w.line(f"out[j] = {_store_expr(mode, layer.activation, 'acc')};")
    w.close()


def _emit_conv(w: _Writer, layer: Conv2DSpec, in_shape, out_shape, prefix: str, idx: int, mode: str):
    in_h, in_w, in_c = in_shape.dims
    out_h, out_w, out_c = out_shape.dims
    k_h, k_w, s_h, s_w = layer.kernel_h, layer.kernel_w, layer.stride_h, layer.stride_w
    acc_t = "fix16_t" if mode == "fix16" else "float"
    w.for_loop("oy", out_h)
    w.for_loop("ox", out_w)
    w.for_loop("oc", out_c)
    w.line(f"{acc_t} acc = {prefix}_b{idx}[oc];")
    w.for_loop("ky", k_h)
    w.for_loop("kx", k_w)
    w.for_loop("ic", in_c)
    src = f"in[((oy * {s_h} + ky) * {in_w} + (ox * {s_w} + kx)) * {in_c} + ic]"
    wgt = f"{prefix}_w{idx}[((ky * {k_w} + kx) * {in_c} + ic) * {out_c} + oc]"
    if mode == "fix16":
        w.line(f"acc = fx_add(acc, fx_mul({src}, {wgt}));")
    else:
        w.line(f"acc = acc + {src} * {wgt};")
    w.close()
    w.close()
    w.close()
    w.line(f"out[(oy * {out_w} + ox) * {out_c} + oc] = {_store_expr(mode, layer.activation, 'acc')};")
    w.close()
    w.close()
    w.close()


def _emit_pool(w: _Writer, layer, in_shape, out_shape, mode: str):
    in_h, in_w, ch = in_shape.dims
    out_h, out_w, _ = out_shape.dims
    w_h, w_w, s_h, s_w = layer.window_h, layer.window_w, layer.stride_h, layer.stride_w
    val_t = "fix16_t" if mode == "fix16" else "float"
    w.for_loop("oy", out_h)
    w.for_loop("ox", out_w)
    w.for_loop("c", ch)
    elem = f"in[((oy * {s_h} + ky) * {in_w} + (ox * {s_w} + kx)) * {ch} + c]"
    if isinstance(layer, AvgPool2DSpec):
        # Average = window sum times a precomputed reciprocal; no division.
        recip = 1.0 / (w_h * w_w)
        w.line(f"{val_t} s = 0;" if mode == "fix16" else f"{val_t} s = 0.0f;")
        w.for_loop("ky", w_h)
        w.for_loop("kx", w_w)
        if mode == "fix16":
            w.line(f"s = fx_add(s, {elem});")
        else:
            w.line(f"s = s + {elem};")
        w.close()
        w.close()
        if mode == "fix16":
            w.line(f"out[(oy * {out_w} + ox) * {ch} + c] = fx_mul(s, {fx_from_real(recip)});")
        else:
            w.line(f"out[(oy * {out_w} + ox) * {ch} + c] = s * {_f32_literal(recip)};")
    else:
        w.line(f"{val_t} m = in[(oy * {s_h} * {in_w} + ox * {s_w}) * {ch} + c];")
        w.for_loop("ky", w_h)
        w.for_loop("kx", w_w)
        w.line(f"{val_t} v = {elem};")
        w.open("if (v > m)")
        w.line("m = v;")
        w.close()
        w.close()
        w.close()
        w.line(f"out[(oy * {out_w} + ox) * {ch} + c] = m;")
    w.close()
    w.close()
    w.close()


def _emit_source(network: NetworkIR, prefix: str, mode: str) -> str:
    shapes = infer_shapes(network)
    t = _ctype(mode)
    val_t = "fix16_t" if mode == "fix16" else "float"
    n_layers = len(network.layers)
    in_n = network.input_shape.count
    out_n = shapes[-1].count

    w = _Writer()
    w.line(f"/* Network \"{network.name}\" compiled to static C ({mode}). {GENERATOR_TAG} */")
    w.line(f'#include "{prefix}.h"')
    w.line(f'#include "{RUNTIME_HEADER_NAME}"')
    w.line()
    for i, layer in enumerate(network.layers):
        if layer.weight_slice.length:
            w.line(f"extern const {t} {prefix}_w{i}[{layer.weight_slice.length}];")
            w.line(f"extern const {t} {prefix}_b{i}[{layer.bias_slice.length}];")
    w.line()

    # Ping-pong intermediates: layer i writes buffer i % 2, the last layer
    # writes the caller's output directly.
    buf_count = max((s.count for s in shapes[:-1]), default=0)
    n_buffers = min(n_layers - 1, 2)
    for b in range(n_buffers):
        w.line(f"static {val_t} {prefix}_buf_{'ab'[b]}[{buf_count}];")
    if n_buffers:
        w.line()

    in_shape = network.input_shape
    for i, layer in enumerate(network.layers):
        out_shape = shapes[i]
        w.open(f"static void {prefix}_layer{i}(const {val_t} *in, {val_t} *out)")
        if isinstance(layer, DenseSpec):
            _emit_dense(w, layer, prefix, i, mode)
        elif isinstance(layer, Conv2DSpec):
            _emit_conv(w, layer, in_shape, out_shape, prefix, i, mode)
        elif isinstance(layer, (AvgPool2DSpec, MaxPool2DSpec)):
            _emit_pool(w, layer, in_shape, out_shape, mode)
        else:
            w.for_loop("i", out_shape.count)
            w.line("out[i] = in[i];")
            w.close()
        w.close()
        w.line()
        in_shape = out_shape

    w.open(f"void {prefix}_run(const {t} in[{in_n}], {t} out[{out_n}])")
    for i in range(n_layers):
        src = "in" if i == 0 else f"{prefix}_buf_{'ab'[(i - 1) % 2]}"
        dst = "out" if i == n_layers - 1 else f"{prefix}_buf_{'ab'[i % 2]}"
        w.line(f"{prefix}_layer{i}({src}, {dst});")
    w.close()
    return w.text()


def generate(network: NetworkIR, config: CodegenConfig | None = None) -> EmittedUnit:
    """Emit header, source, weights, and runtime for a validated network."""
    config = config or CodegenConfig()
    if config.mode not in MODES:
        raise CodegenError(f"unsupported mode {config.mode!r}")
    network.require_valid()
    if config.prefix is not None:
        prefix = config.prefix
        if (
            not re.fullmatch(r"[A-Za-z_][0-9A-Za-z_]*", prefix)
            or prefix in _C_KEYWORDS
            or prefix == "tp_runtime"
        ):
            raise CodegenError(f"prefix {prefix!r} is not a usable C identifier")
    else:
        prefix = sanitize_prefix(network.name)
    return EmittedUnit(
        prefix=prefix,
        mode=config.mode,
        header=_emit_header(network, prefix, config.mode),
        source=_emit_source(network, prefix, config.mode),
        weights_source=_emit_weights(network, prefix, config.mode),
        runtime_header=emit_runtime_header(config.mode) if config.emit_runtime_header else None,
    )


def static_data_bytes(network: NetworkIR) -> int:
    """Expected bytes of static arrays in the emitted unit (weights + buffers)."""
    from .ir import count_connections

    shapes = infer_shapes(network)
    buf_count = max((s.count for s in shapes[:-1]), default=0)
    n_buffers = min(len(network.layers) - 1, 2)
    return 4 * (count_connections(network) + n_buffers * buf_count)


def emit_test_harness(network: NetworkIR, vectors, config: CodegenConfig | None = None) -> str:
    """A main() that runs the given input vectors and prints raw output bits.

    One line per vector: zero-padded hex words of each output value, space
    separated. Vectors are given as reals; in fix16 mode they are converted
    at emission time so the compiled harness never parses or converts.
    """
    config = config or CodegenConfig()
    prefix = config.prefix or sanitize_prefix(network.name)
    shapes = infer_shapes(network)
    in_n = network.input_shape.count
    out_n = shapes[-1].count
    t = _ctype(config.mode)

    vecs = np.asarray(vectors, dtype=np.float64).reshape(-1, in_n) if np.size(vectors) else np.zeros((0, in_n))
    n_vec = len(vecs)

    w = _Writer()
    w.line(f"/* Differential test harness for network \"{network.name}\". {GENERATOR_TAG} */")
    w.line("#include <stdio.h>")
    w.line("#include <stdint.h>")
    w.line()
    w.line(f'#include "{prefix}.h"')
    w.line()
    if n_vec:
        w.line(f"static const {t} tp_vectors[{n_vec}][{in_n}] = {{")
        for vec in vecs:
            if config.mode == "fix16":
                vals = [str(fx_from_real(float(v))) for v in vec]
            else:
                vals = [_f32_literal(v) for v in vec]
            w.line("    { " + ", ".join(vals) + " },")
        w.line("};")
        w.line()
    w.open("int main(void)")
    if n_vec:
        w.line(f"{t} out[{out_n}];")
        w.for_loop("v", n_vec)
        w.line(f"{prefix}_run(tp_vectors[v], out);")
        w.for_loop("j", out_n)
        w.open("if (j > 0)")
        w.line('printf(" ");')
        w.close()
        if config.mode == "fix16":
            w.line('printf("%08x", (unsigned int)(uint32_t)out[j]);')
        else:
            w.line("union { float f; uint32_t u; } bits;")
            w.line("bits.f = out[j];")
            w.line('printf("%08x", (unsigned int)bits.u);')
        w.close()
        w.line('printf("\\n");')
        w.close()
    else:
        w.for_loop("v", 0)
        w.close()
    w.line("return 0;")
    w.close()
    return w.text()
