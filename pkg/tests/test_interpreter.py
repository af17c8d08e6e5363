import numpy as np
import pytest

from nn2c import models
from nn2c.errors import ModeMismatch, ShapeMismatch
from nn2c.fixedpoint import fx_from_real, fx_to_real
from nn2c.interpreter import Executor, run, run_batch
from nn2c.ir import DenseSpec

from helpers import (
    naive_dense_run_f32,
    naive_dense_run_fx,
    random_dense_net,
    ulp_diff_f32,
)

TRUTH_TABLE = [((0, 0), 0.0), ((0, 1), 1.0), ((1, 0), 1.0), ((1, 1), 0.0)]


def test_xor_truth_table_float32(xor_net):
    ex = Executor(xor_net, "float32")
    for (a, b), want in TRUTH_TABLE:
        out = ex.run(np.array([a, b], dtype=np.float32))
        assert out.shape == (1,)
        assert float(out[0]) == want


def test_xor_truth_table_fix16(xor_net):
    ex = Executor(xor_net, "fix16")
    for (a, b), want in TRUTH_TABLE:
        x = np.array([fx_from_real(a), fx_from_real(b)], dtype=np.int64)
        out = ex.run(x)
        assert fx_to_real(int(out[0])) == want


def test_all_zero_weights_give_zero():
    net = models.build_network(
        "zeros", (3,), [("dense", 4, "relu"), ("dense", 2, "linear")],
        weights=np.zeros(3 * 4 + 4 + 4 * 2 + 2, dtype=np.float32),
    )
    out = run(net, np.array([0.5, -1.0, 2.0], dtype=np.float32))
    assert np.array_equal(out, np.zeros(2, dtype=np.float32))


def test_identity_net_is_identity():
    net = models.identity_net()
    ex = Executor(net, "float32")
    rng = np.random.default_rng(3)
    for v in rng.uniform(-100, 100, size=50).astype(np.float32):
        assert ex.run(np.array([v], dtype=np.float32))[0] == v


def test_run_batch_is_map_of_run(xor_net):
    xs = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.float32)
    batch = run_batch(xor_net, xs)
    singles = np.stack([run(xor_net, x) for x in xs])
    assert np.array_equal(batch, singles)


def test_run_batch_empty(xor_net):
    out = run_batch(xor_net, np.zeros((0, 2), dtype=np.float32))
    assert out.shape == (0, 1)


def test_run_batch_repeated_input_is_stateless(xor_net):
    xs = np.tile(np.array([1, 0], dtype=np.float32), (5, 1))
    outs = run_batch(xor_net, xs)
    assert np.all(outs == outs[0])


def test_statelessness_bitwise(lenet_net):
    ex = Executor(lenet_net, "float32")
    rng = np.random.default_rng(4)
    x = rng.uniform(-1, 1, size=(32, 32, 1)).astype(np.float32)
    y = rng.uniform(-1, 1, size=(32, 32, 1)).astype(np.float32)
    first = ex.run(x)
    ex.run(y)
    third = ex.run(x)
    assert np.array_equal(first.view(np.uint32), third.view(np.uint32))


def test_mode_mismatch_rejected(xor_net):
    with pytest.raises(ModeMismatch):
        Executor(xor_net, "fix16").run(np.array([0.5, 0.5], dtype=np.float32))
    with pytest.raises(ModeMismatch):
        Executor(xor_net, "float32").run(np.array([1, 2], dtype=np.complex64))


def test_shape_mismatch_rejected(xor_net):
    with pytest.raises(ShapeMismatch):
        run(xor_net, np.zeros(3, dtype=np.float32))


def test_rank3_input_accepts_flat_and_shaped(lenet_net):
    ex = Executor(lenet_net, "float32")
    rng = np.random.default_rng(5)
    img = rng.uniform(0, 1, size=(32, 32, 1)).astype(np.float32)
    a = ex.run(img)
    b = ex.run(img.reshape(-1))
    assert np.array_equal(a, b)


def test_naive_oracle_equivalence_small():
    # Spot version of the acceptance sweep: 30 networks, both modes.
    rng = np.random.default_rng(6)
    for _ in range(30):
        net = random_dense_net(rng)
        n_in = net.input_shape.dims[0]
        vec = rng.uniform(-1, 1, size=n_in)

        x32 = vec.astype(np.float32)
        mine = Executor(net, "float32").run(x32)
        oracle = naive_dense_run_f32(net, x32)
        assert all(ulp_diff_f32(a, b) <= 4 for a, b in zip(mine, oracle))

        raw = np.array([fx_from_real(v) for v in vec], dtype=np.int64)
        mine_fx = Executor(net, "fix16").run(raw)
        oracle_fx = naive_dense_run_fx(net, raw)
        assert np.array_equal(mine_fx, oracle_fx)


def test_mac_instrumentation_matches_formula(xor_net, lenet_net):
    for net, expect in ((xor_net, 6), (lenet_net, 416520)):
        ex = Executor(net, "float32")
        ex.run(np.zeros(net.input_shape.count, dtype=np.float32))
        assert ex.last_mac_count == expect


def _mode_agreement_budget(net, input_bound=1.0):
    """Propagate |float32 - fix16/2^16| error bounds through a dense net.

    Per-op contributions: quantizing a real to Q16.16 costs at most 2^-17;
    each fixed multiply rounds within 2^-17; fixed adds are exact until
    saturation (excluded by construction here); float32 rounding costs
    (n+1) * 2^-24 * magnitude per dot product; the sigmoid/tanh tables are
    within 2e-3 of the true curves.
    """
    eps_q = 2.0**-17
    eps32 = 2.0**-24
    lut_err = 2e-3

    m = np.full(net.input_shape.dims[0], input_bound)  # |value| bound
    d = np.full(net.input_shape.dims[0], eps_q)  # |f32 - fx| bound
    for li, layer in enumerate(net.layers):
        assert isinstance(layer, DenseSpec)
        w = np.abs(net.weights_of(li).astype(np.float64)).reshape(layer.in_count, layer.out_count)
        b = np.abs(net.biases_of(li).astype(np.float64))
        m_out = b + m @ w
        d_out = (
            eps_q  # bias quantization
            + d @ w  # inherited input error
            + (m + d) @ np.full_like(w, eps_q)  # weight quantization
            + layer.in_count * (eps_q + eps32)  # multiply rounding, both sides
            + (layer.in_count + 1) * eps32 * m_out  # float32 accumulation
        )
        if layer.activation == "relu":
            pass  # Lipschitz 1
        elif layer.activation == "sigmoid":
            d_out = 0.25 * d_out + lut_err + eps_q
            m_out = np.minimum(m_out, 1.0)
        elif layer.activation == "tanh":
            d_out = d_out + lut_err + eps_q
            m_out = np.minimum(m_out, 1.0)
        m, d = m_out, d_out
        assert m.max() < 30000, "budget derivation assumes no saturation"
    return d


def test_mode_agreement_within_derived_budget():
    rng = np.random.default_rng(7)
    for _ in range(40):
        net = random_dense_net(rng, max_neurons=18, max_layers=3)
        budget = _mode_agreement_budget(net)
        vec = rng.uniform(-1, 1, size=net.input_shape.dims[0])
        f = Executor(net, "float32").run(vec.astype(np.float32)).astype(np.float64)
        q = Executor(net, "fix16").run(
            np.array([fx_from_real(v) for v in vec], dtype=np.int64)
        )
        q_real = np.array([fx_to_real(int(v)) for v in q])
        assert np.all(np.abs(f - q_real) <= budget), (
            f"disagreement {np.abs(f - q_real)} exceeds budget {budget}"
        )
