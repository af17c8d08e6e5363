"""Command-line front end: compile | run | diff | info.

Exit codes are stable and documented:

    0  success (diff: equivalent)
    1  usage error or unexpected failure
    2  I/O error (missing or unreadable file, unwritable output)
    3  manifest syntax error
    4  unsupported manifest version
    5  weights checksum mismatch
    6  weights length mismatch
    7  network validation failed (shapes, slices, unsupported layers)
    8  lint findings on generated code
    9  diff found a divergence (or harness output malformed)

Vector files hold one input vector per line, whitespace-separated
decimals; blank lines and lines starting with '#' are ignored. In fix16
mode the decimals are converted through fx_from_real before execution.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analyzer import cost_model, lint
from .codegen import CodegenConfig, emit_test_harness, generate
from .errors import (
    ChecksumMismatch,
    CodegenError,
    ManifestSyntax,
    ModeMismatch,
    NetworkValidationError,
    Nn2cError,
    NonIntegralPoolOutput,
    ShapeMismatch,
    UnsupportedActivation,
    UnsupportedLayer,
    UnsupportedVersion,
    WeightsLengthMismatch,
)
from .ingest import load_model, parse_manifest
from .interpreter import Executor
from .fixedpoint import fx_from_real, fx_to_real

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_MANIFEST = 3
EXIT_VERSION = 4
EXIT_CHECKSUM = 5
EXIT_WEIGHTS_LENGTH = 6
EXIT_VALIDATION = 7
EXIT_LINT = 8
EXIT_DIFF = 9

_ERROR_CODES = [
    (ManifestSyntax, EXIT_MANIFEST),
    (UnsupportedVersion, EXIT_VERSION),
    (ChecksumMismatch, EXIT_CHECKSUM),
    (WeightsLengthMismatch, EXIT_WEIGHTS_LENGTH),
    (NetworkValidationError, EXIT_VALIDATION),
    (ShapeMismatch, EXIT_VALIDATION),
    (NonIntegralPoolOutput, EXIT_VALIDATION),
    (UnsupportedLayer, EXIT_VALIDATION),
    (UnsupportedActivation, EXIT_VALIDATION),
    (ModeMismatch, EXIT_VALIDATION),
    (CodegenError, EXIT_VALIDATION),
]


def _exit_code_for(exc: Exception) -> int:
    for klass, code in _ERROR_CODES:
        if isinstance(exc, klass):
            return code
    return EXIT_USAGE


def _load(manifest_path: str, weights_path: str | None):
    manifest_bytes = Path(manifest_path).read_bytes()
    if weights_path is None:
        doc = parse_manifest(manifest_bytes)
        weights_path = str(Path(manifest_path).parent / doc["weights_file"])
    weights_bytes = Path(weights_path).read_bytes()
    return load_model(manifest_bytes, weights_bytes)


def _read_vectors(path: str, n: int) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        values = [float(v) for v in line.split()]
        if len(values) != n:
            raise ShapeMismatch(
                f"{path}:{lineno}: vector has {len(values)} values, network takes {n}"
            )
        rows.append(values)
    return np.array(rows, dtype=np.float64).reshape(-1, n)


def _raw_words(out: np.ndarray, mode: str) -> list[str]:
    if mode == "fix16":
        return [f"{int(v) & 0xFFFFFFFF:08x}" for v in out]
    return [f"{v.view(np.uint32):08x}" for v in np.asarray(out, dtype=np.float32)]


def _decimals(out: np.ndarray, mode: str) -> list[str]:
    if mode == "fix16":
        return [f"{fx_to_real(int(v)):.6f}" for v in out]
    return [repr(float(v)) for v in np.asarray(out, dtype=np.float32)]


def _run_vectors(network, vectors: np.ndarray, mode: str) -> list[np.ndarray]:
    ex = Executor(network, mode)
    outputs = []
    for vec in vectors:
        if mode == "fix16":
            x = np.array([fx_from_real(v) for v in vec], dtype=np.int64)
        else:
            x = np.asarray(vec, dtype=np.float32)
        outputs.append(ex.run(x))
    return outputs


def cmd_compile(args) -> int:
    network = _load(args.manifest, args.weights)
    config = CodegenConfig(mode=args.mode)
    unit = generate(network, config)
    report = lint(unit)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, text in unit.files().items():
        (outdir / name).write_text(text, encoding="utf-8", newline="\n")
    written = list(unit.files())

    if args.harness_vectors:
        rng = np.random.default_rng(args.seed)
        vectors = rng.uniform(-1.0, 1.0, size=(args.harness_vectors, network.input_shape.count))
        harness = emit_test_harness(network, vectors, config)
        (outdir / f"{unit.prefix}_harness.c").write_text(harness, encoding="utf-8", newline="\n")
        vec_text = "\n".join(" ".join(repr(float(v)) for v in row) for row in vectors)
        (outdir / f"{unit.prefix}_vectors.txt").write_text(vec_text + "\n", encoding="utf-8", newline="\n")
        written += [f"{unit.prefix}_harness.c", f"{unit.prefix}_vectors.txt"]

    print(f"wrote {len(written)} files to {outdir}: {' '.join(written)}")
    print(cost_model(network).to_text(), end="")
    if not report.verdict:
        print(report.to_text(), end="")
        return EXIT_LINT
    print("lint\tPASS")
    return EXIT_OK


def cmd_run(args) -> int:
    network = _load(args.manifest, args.weights)
    vectors = _read_vectors(args.vectors, network.input_shape.count)
    sep = "\t" if args.format == "tsv" else " | "
    for out in _run_vectors(network, vectors, args.mode):
        print(" ".join(_raw_words(out, args.mode)) + sep + " ".join(_decimals(out, args.mode)))
    return EXIT_OK


def cmd_diff(args) -> int:
    network = _load(args.manifest, args.weights)
    vectors = _read_vectors(args.vectors, network.input_shape.count)
    harness_lines = [
        line.strip()
        for line in Path(args.harness_output).read_text().splitlines()
        if line.strip()
    ]
    if len(harness_lines) != len(vectors):
        print(f"FAIL: harness printed {len(harness_lines)} lines for {len(vectors)} vectors")
        return EXIT_DIFF
    if not len(vectors):
        print("PASS (warning: empty comparison, no vectors)")
        return EXIT_OK

    outputs = _run_vectors(network, vectors, args.mode)
    for idx, (line, out) in enumerate(zip(harness_lines, outputs)):
        got = line.split()
        want = _raw_words(out, args.mode)
        if len(got) != len(want):
            print(f"FAIL: vector {idx}: harness printed {len(got)} outputs, expected {len(want)}")
            return EXIT_DIFF
        for j, (g, w) in enumerate(zip(got, want)):
            if args.mode == "fix16":
                same = g == w
            else:
                same = _ulp_diff(g, w) <= args.ulp
            if not same:
                print(f"FAIL: first divergence at vector {idx} output {j}: harness {g}, interpreter {w}")
                return EXIT_DIFF
    print(f"PASS ({len(vectors)} vectors, {args.mode})")
    return EXIT_OK


def _ulp_diff(hex_a: str, hex_b: str) -> int:
    a = int(hex_a, 16)
    b = int(hex_b, 16)
    # Map the float bit patterns onto a monotone integer line.
    a = a - 0x80000000 if a & 0x80000000 else a + 0x80000000
    b = b - 0x80000000 if b & 0x80000000 else b + 0x80000000
    return abs(a - b)


def cmd_info(args) -> int:
    network = _load(args.manifest, args.weights)
    from .ir import count_connections, infer_shapes

    shapes = infer_shapes(network)
    report = cost_model(network)
    if args.format == "tsv":
        print(f"name\t{network.name}")
        print(f"input_shape\t{'x'.join(str(d) for d in network.input_shape.dims)}")
        for i, (layer, shape) in enumerate(zip(network.layers, shapes)):
            print(f"layer{i}\t{layer.kind}\t{layer.activation}\t{'x'.join(str(d) for d in shape.dims)}")
        print(f"connections\t{count_connections(network)}")
        print(report.to_text(), end="")
    else:
        print(f"network {network.name!r}: input {network.input_shape.dims}")
        for i, (layer, shape) in enumerate(zip(network.layers, shapes)):
            print(f"  layer {i}: {layer.kind} ({layer.activation}) -> {shape.dims}")
        print(f"connections: {count_connections(network)}")
        print(report.to_text(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nn2c",
        description="Compile feed-forward networks to static, analyzable C.",
    )
    parser.add_argument("--version", action="version", version=f"nn2c {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, vectors_required=False):
        p.add_argument("manifest", help="model manifest (JSON)")
        p.add_argument("--weights", help="weights blob (defaults to the manifest's weights_file)")
        p.add_argument("--mode", choices=("float32", "fix16"), default="fix16")

    p = sub.add_parser("compile", help="emit C sources, lint them, print the cost report")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--harness-vectors", type=int, default=0, metavar="N",
                   help="also emit a test harness with N seeded random input vectors")
    p.add_argument("--seed", type=int, default=0, help="seed for harness vectors")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("run", help="run the reference interpreter over a vector file")
    common(p)
    p.add_argument("--vectors", required=True, help="input vector file")
    p.add_argument("--format", choices=("text", "tsv"), default="text")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("diff", help="compare compiled-harness output against the interpreter")
    common(p)
    p.add_argument("harness_output", help="file with the harness's stdout")
    p.add_argument("--vectors", required=True, help="the vector file the harness embedded")
    p.add_argument("--ulp", type=int, default=4,
                   help="float32 tolerance in ULPs (fix16 is always bit-exact)")
    p.set_defaults(fn=cmd_diff)

    p = sub.add_parser("info", help="print shapes, connection count, and cost report")
    common(p)
    p.add_argument("--format", choices=("text", "tsv"), default="text")
    p.set_defaults(fn=cmd_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Nn2cError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
