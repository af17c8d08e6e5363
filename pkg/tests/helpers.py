"""Shared test machinery: independent oracles, fuzzers, and a C harness runner.

The oracles here are deliberately naive re-implementations (explicit
connection triples, scalar loops) kept free of the production kernels so
differential tests mean something.
"""

from __future__ import annotations

import subprocess
from pathlib import Path

import numpy as np

from nn2c import activations, fixedpoint, models
from nn2c.codegen import CodegenConfig, emit_test_harness, generate
from nn2c.ir import DenseSpec, NetworkIR

CFLAGS = ["-O1", "-std=c99", "-ffp-contract=off", "-Wall", "-Wextra", "-Werror"]

ACT_F32 = {
    "linear": lambda v: v,
    "relu": activations.relu_f32,
    "sigmoid": activations.sigmoid_f32,
    "tanh": activations.tanh_f32,
}

ACT_FX = {
    "linear": lambda v: v,
    "relu": fixedpoint.fx_relu,
    "sigmoid": fixedpoint.fx_sigmoid,
    "tanh": fixedpoint.fx_tanh,
}


def connection_triples(network: NetworkIR):
    """Materialize a dense-only network as per-neuron (source, weight) lists.

    Neurons get global ids; every inter-layer connection becomes an explicit
    triple, ordered by (destination, ascending source) like the normative
    accumulation order.
    """
    assert all(isinstance(l, DenseSpec) for l in network.layers)
    next_id = 0
    prev_ids = list(range(network.input_shape.dims[0]))
    next_id = len(prev_ids)
    layers = []
    for li, layer in enumerate(network.layers):
        w = network.weights_of(li)
        b = network.biases_of(li)
        ids = list(range(next_id, next_id + layer.out_count))
        next_id += layer.out_count
        per_neuron = []
        for j, nid in enumerate(ids):
            conns = [
                (prev_ids[i], float(w[i * layer.out_count + j]))
                for i in range(layer.in_count)
            ]
            per_neuron.append((nid, float(b[j]), conns))
        layers.append((layer.activation, per_neuron))
        prev_ids = ids
    return layers, prev_ids


def naive_dense_run_f32(network: NetworkIR, x) -> np.ndarray:
    """Literal walk of the connection set in float32, no vectorization."""
    layers, out_ids = connection_triples(network)
    values = {}
    for i, v in enumerate(np.asarray(x, dtype=np.float32)):
        values[i] = np.float32(v)
    for act, per_neuron in layers:
        fn = ACT_F32[act]
        new_values = {}
        for nid, bias, conns in per_neuron:
            v = np.float32(bias)
            for src, w in conns:
                v = np.float32(v + values[src] * np.float32(w))
            new_values[nid] = fn(v)
        values.update(new_values)
    return np.array([values[i] for i in out_ids], dtype=np.float32)


def naive_dense_run_fx(network: NetworkIR, x_raw) -> np.ndarray:
    """Same walk in saturating Q16.16; weights converted like the interpreter."""
    layers, out_ids = connection_triples(network)
    values = {i: int(v) for i, v in enumerate(x_raw)}
    for act, per_neuron in layers:
        fn = ACT_FX[act]
        new_values = {}
        for nid, bias, conns in per_neuron:
            v = fixedpoint.fx_from_real(bias)
            for src, w in conns:
                v = fixedpoint.fx_add(
                    v, fixedpoint.fx_mul(values[src], fixedpoint.fx_from_real(w))
                )
            new_values[nid] = fn(v)
        values.update(new_values)
    return np.array([values[i] for i in out_ids], dtype=np.int64)


def random_dense_net(rng: np.random.Generator, max_neurons=20, max_layers=4) -> NetworkIR:
    """Random dense-only network with at most `max_neurons` total units."""
    n_in = int(rng.integers(1, 6))
    budget = max_neurons - n_in
    plan = []
    shape = n_in
    for _ in range(int(rng.integers(1, max_layers + 1))):
        units = int(rng.integers(1, max(2, min(6, budget) + 1)))
        act = str(rng.choice(["linear", "relu", "sigmoid", "tanh"]))
        plan.append(("dense", units, act))
        budget -= units
        shape = units
        if budget <= 0:
            break
    total = 0
    prev = n_in
    for _, units, _ in plan:
        total += prev * units + units
        prev = units
    weights = (rng.random(total, dtype=np.float32) * 2.0 - 1.0).astype(np.float32)
    return models.build_network(f"fuzz{int(rng.integers(1e9))}", (n_in,), plan, weights=weights)


def random_architecture(rng: np.random.Generator) -> NetworkIR:
    """Random mixed-layer network (conv/pool/flatten/dense), always valid."""
    plan = []
    if rng.random() < 0.6:
        h = int(rng.integers(4, 11))
        w = int(rng.integers(4, 11))
        c = int(rng.integers(1, 4))
        shape = (h, w, c)
        input_shape = shape
        for _ in range(int(rng.integers(0, 3))):
            kind = str(rng.choice(["conv2d", "avgpool2d", "maxpool2d"]))
            h, w, c = shape
            if kind == "conv2d":
                options = [
                    (kh, kw, sh, sw)
                    for kh in (1, 2, 3)
                    for kw in (1, 2, 3)
                    for sh in (1, 2)
                    for sw in (1, 2)
                    if kh <= h and kw <= w and (h - kh) % sh == 0 and (w - kw) % sw == 0
                ]
                if not options:
                    break
                kh, kw, sh, sw = options[int(rng.integers(len(options)))]
                filters = int(rng.integers(1, 5))
                act = str(rng.choice(["linear", "relu", "sigmoid", "tanh"]))
                plan.append(("conv2d", (kh, kw), filters, (sh, sw), act))
                shape = ((h - kh) // sh + 1, (w - kw) // sw + 1, filters)
            else:
                options = [
                    (wh, ww)
                    for wh in (2, 3)
                    for ww in (2, 3)
                    if wh <= h and ww <= w and (h - wh) % wh == 0 and (w - ww) % ww == 0
                ]
                if not options:
                    break
                wh, ww = options[int(rng.integers(len(options)))]
                plan.append((kind, (wh, ww), (wh, ww)))
                shape = ((h - wh) // wh + 1, (w - ww) // ww + 1, c)
            if shape[0] < 2 or shape[1] < 2:
                break
        plan.append(("flatten",))
        units = shape[0] * shape[1] * shape[2]
    else:
        units = int(rng.integers(1, 9))
        input_shape = (units,)
    for _ in range(int(rng.integers(1, 3))):
        out = int(rng.integers(1, 7))
        act = str(rng.choice(["linear", "relu", "sigmoid", "tanh"]))
        plan.append(("dense", out, act))
        units = out
    seed = int(rng.integers(1e9))
    name = f"fuzz{seed}"
    net = models.build_network(name, input_shape, plan, seed=seed)
    return net


def random_inputs(rng: np.random.Generator, network: NetworkIR, n: int, mode: str):
    """Random test vectors as float64 rows (the vector-file currency)."""
    count = network.input_shape.count
    vecs = rng.uniform(-2.0, 2.0, size=(n, count))
    return vecs


def interpreter_raw_lines(network: NetworkIR, vectors, mode: str) -> list[str]:
    """Expected harness output: one line of hex words per vector."""
    from nn2c.interpreter import Executor

    ex = Executor(network, mode)
    lines = []
    for vec in np.asarray(vectors, dtype=np.float64).reshape(-1, network.input_shape.count):
        if mode == "fix16":
            x = np.array([fixedpoint.fx_from_real(v) for v in vec], dtype=np.int64)
            out = ex.run(x)
            words = [f"{int(v) & 0xFFFFFFFF:08x}" for v in out]
        else:
            x = np.asarray(vec, dtype=np.float32)
            out = ex.run(x)
            words = [f"{v.view(np.uint32):08x}" for v in np.asarray(out, dtype=np.float32)]
        lines.append(" ".join(words))
    return lines


def compile_and_run(unit, harness_src: str, workdir: Path) -> list[str]:
    """Write the unit + harness, build with the host compiler, return stdout lines."""
    workdir.mkdir(parents=True, exist_ok=True)
    for name, text in unit.files().items():
        (workdir / name).write_text(text)
    (workdir / "harness.c").write_text(harness_src)
    exe = workdir / "harness"
    sources = [
        str(workdir / f"{unit.prefix}.c"),
        str(workdir / f"{unit.prefix}_weights.c"),
        str(workdir / "harness.c"),
    ]
    subprocess.run(
        ["cc", *CFLAGS, "-o", str(exe), *sources],
        check=True,
        capture_output=True,
        text=True,
    )
    res = subprocess.run([str(exe)], check=True, capture_output=True, text=True)
    return res.stdout.splitlines()


def codegen_equivalence(network: NetworkIR, mode: str, vectors, workdir: Path) -> tuple[list[str], list[str]]:
    """(harness lines, interpreter lines) for the same vectors."""
    cfg = CodegenConfig(mode=mode)
    unit = generate(network, cfg)
    harness = emit_test_harness(network, vectors, cfg)
    got = compile_and_run(unit, harness, workdir)
    want = interpreter_raw_lines(network, vectors, mode)
    return got, want


def ulp_diff_f32(a: np.float32, b: np.float32) -> int:
    """Distance in representable float32 steps (sign-aware)."""
    ua = int(np.float32(a).view(np.uint32))
    ub = int(np.float32(b).view(np.uint32))
    ua = ua - 0x80000000 if ua & 0x80000000 else ua + 0x80000000
    ub = ub - 0x80000000 if ub & 0x80000000 else ub + 0x80000000
    return abs(ua - ub)
