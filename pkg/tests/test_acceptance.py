"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report. Wall-clock bounds are asserted where the criterion states one
(kernel JIT warm-up happens in a session fixture and is not part of any
timed section).
"""

import shutil
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from nn2c import models
from nn2c.analyzer import cost_model, lint, lint_files
from nn2c.cli import main as cli_main
from nn2c.codegen import CodegenConfig, generate
from nn2c.fixedpoint import FX_ONE, fx_from_real, fx_sigmoid, fx_tanh
from nn2c.ingest import save_model
from nn2c.interpreter import Executor
from nn2c.ir import count_connections

from helpers import (
    codegen_equivalence,
    naive_dense_run_f32,
    naive_dense_run_fx,
    random_architecture,
    random_dense_net,
    ulp_diff_f32,
)

pytestmark = pytest.mark.acceptance


def _report(name: str, elapsed: float, detail: str = ""):
    suffix = f" [{detail}]" if detail else ""
    print(f"\n[PASS] {name} ({elapsed:.2f}s){suffix}")


@pytest.fixture(scope="module")
def fuzz_nets():
    rng = np.random.default_rng(0xACCE)
    return [random_architecture(rng) for _ in range(50)]


def test_connection_count_reproduction(xor_net, lenet_net):
    t0 = time.perf_counter()
    assert count_connections(xor_net) == 9
    assert count_connections(lenet_net) == 61706
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report("connection-count reproduction (xor=9, lenet5=61706)", elapsed)


def test_execution_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0x0A1)
    worst_ulp = 0
    for _ in range(200):
        net = random_dense_net(rng, max_neurons=20, max_layers=4)
        for _ in range(2):
            vec = rng.uniform(-1, 1, size=net.input_shape.dims[0])

            raw = np.array([fx_from_real(v) for v in vec], dtype=np.int64)
            mine_fx = Executor(net, "fix16").run(raw)
            oracle_fx = naive_dense_run_fx(net, raw)
            assert np.array_equal(mine_fx, oracle_fx), net.name

            x32 = vec.astype(np.float32)
            mine_f = Executor(net, "float32").run(x32)
            oracle_f = naive_dense_run_f32(net, x32)
            for a, b in zip(mine_f, oracle_f):
                d = ulp_diff_f32(a, b)
                worst_ulp = max(worst_ulp, d)
                assert d <= 4
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    _report(
        "interpreter vs naive connection-set oracle (200 nets)",
        elapsed,
        f"fix16 bit-exact, float32 worst ulp {worst_ulp}",
    )


def test_codegen_functional_equivalence(xor_net, lenet_net, fuzz_nets, tmp_path):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0xC0DE)
    jobs = []
    for i, net in enumerate([xor_net, lenet_net] + fuzz_nets):
        vecs = rng.uniform(-2.0, 2.0, size=(100, net.input_shape.count))
        jobs.append((i, net, vecs))

    def check(job):
        i, net, vecs = job
        got, want = codegen_equivalence(net, "fix16", vecs, tmp_path / f"n{i}")
        assert got == want, f"{net.name}: compiled output diverges from interpreter"
        return len(got)

    with ThreadPoolExecutor(max_workers=8) as pool:
        totals = list(pool.map(check, jobs))
    elapsed = time.perf_counter() - t0
    assert sum(totals) == 52 * 100
    assert elapsed < 300.0
    _report(
        "codegen functional equivalence (52 nets x 100 inputs, fix16 bit-exact)",
        elapsed,
    )


MUTATIONS = {
    "R1": ("{call};", "{call};\n    malloc(4);"),
    "R2": ("{call};", "{call};\n    {prefix}_run(in, out);"),
    "R3": ("for (int j = 0; j < ", "for (int j = 0; j < n_units_"),
    "R4": ("{call};", "{call};\n    while (in[0] > 0) {{\n    }}"),
    "R5": ('#include "tp_runtime.h"', '#include "tp_runtime.h"\nstatic void (*tp_hook)(void);'),
    "R6": ("{call};", "{call};\n    puts(0);"),
    "R7": ("{call};", "int32_t vla[j];\n    {call};"),
}


def test_predictability_lint(xor_net, lenet_net, fuzz_nets):
    t0 = time.perf_counter()
    units = []
    for net in [xor_net, lenet_net] + fuzz_nets:
        for mode in ("fix16", "float32"):
            units.append(generate(net, CodegenConfig(mode=mode)))
    for unit in units:
        report = lint(unit)
        assert report.verdict, [str(f) for f in report.findings]

    unit = units[0]  # xor fix16
    files = unit.files()
    src = f"{unit.prefix}.c"
    call = f"{unit.prefix}_layer0(in, {unit.prefix}_buf_a)"
    detected = []
    for rule, (needle_t, repl_t) in MUTATIONS.items():
        needle = needle_t.format(call=call, prefix=unit.prefix)
        repl = repl_t.format(call=call, prefix=unit.prefix)
        assert needle in files[src], (rule, needle)
        mutated = dict(files)
        mutated[src] = files[src].replace(needle, repl, 1)
        report = lint_files(mutated)
        assert any(f.rule == rule for f in report.findings), (
            rule,
            [str(f) for f in report.findings],
        )
        detected.append(rule)
    elapsed = time.perf_counter() - t0
    assert detected == list(MUTATIONS)
    _report(
        f"predictability lint ({len(units)} units clean, 7/7 mutations caught)",
        elapsed,
    )


def test_fixed_point_activation_accuracy():
    t0 = time.perf_counter()
    for fn, rng_bound, oracle in (
        (fx_sigmoid, 8, lambda x: 1.0 / (1.0 + np.exp(-x))),
        (fx_tanh, 4, np.tanh),
    ):
        xs = np.arange(-rng_bound * FX_ONE, rng_bound * FX_ONE + 1, dtype=np.int64)
        got = np.fromiter((fn(int(x)) for x in xs), dtype=np.int64, count=len(xs))
        err = np.abs(got / 65536.0 - oracle(xs / 65536.0))
        assert err.max() <= 2e-3
        assert np.all(np.diff(got) >= 0)
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _report("fixed-point sigmoid/tanh exhaustive sweep (err <= 2e-3, monotone)", elapsed)


def test_compile_determinism(xor_net, lenet_net, tmp_path, capsys):
    t0 = time.perf_counter()
    for net in (xor_net, lenet_net):
        manifest, weights = save_model(net)
        (tmp_path / "m.json").write_bytes(manifest)
        (tmp_path / f"{net.name}.bin").write_bytes(weights)
        trees = []
        for tag in ("a", "b"):
            out = tmp_path / f"{net.name}_{tag}"
            rc = cli_main([
                "compile", str(tmp_path / "m.json"), "--out", str(out),
                "--harness-vectors", "10", "--seed", "77",
            ])
            assert rc == 0
            trees.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            shutil.rmtree(out)
        assert trees[0] == trees[1], f"{net.name}: output trees differ between runs"
    capsys.readouterr()
    elapsed = time.perf_counter() - t0
    _report("cmd_compile determinism (byte-identical output trees)", elapsed)


def test_cost_model_consistency(xor_net, lenet_net, fuzz_nets):
    t0 = time.perf_counter()
    fixtures = [xor_net, lenet_net, models.f110_net()] + fuzz_nets
    for net in fixtures:
        expected = cost_model(net).total.macs
        for mode in ("fix16", "float32"):
            ex = Executor(net, mode)
            if mode == "fix16":
                ex.run(np.zeros(net.input_shape.count, dtype=np.int64))
            else:
                ex.run(np.zeros(net.input_shape.count, dtype=np.float32))
            assert ex.last_mac_count == expected, net.name
    elapsed = time.perf_counter() - t0
    _report(
        f"cost-model consistency (instrumented MACs == report, {len(fixtures)} fixtures)",
        elapsed,
    )
