import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bwcast.automal import automal
from bwcast.nn import (
    ForecastModel, LstmCellParams, ModelSpec, TrainConfig, activation, bidirectional_forward, compute_loss,
    init_params, lstm_cell_forward, lstm_layer_forward, model_backward, model_forward, optimizer_step, train,
)
from bwcast.preprocess import fit_normalizer, window_panel


def sig(v):
    return 1.0 / (1.0 + math.exp(-v))


def test_activation_examples():
    assert activation("sigmoid", np.array([0.0]))[0] == 0.5
    np.testing.assert_array_equal(activation("relu", np.array([-1.0, 2.0])), [0, 2])
    np.testing.assert_allclose(activation("softmax", np.array([0.0, 0.0])), [0.5, 0.5])
    with pytest.raises(ValueError):
        activation("gelu", np.zeros(2))


@settings(max_examples=100)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=10), st.floats(-100, 100))
def test_softmax_sums_to_one_and_shift_invariant(xs, shift):
    x = np.array(xs)
    s = activation("softmax", x)
    assert abs(s.sum() - 1) < 1e-12
    np.testing.assert_allclose(activation("softmax", x + shift), s, atol=1e-12)


def random_cell(rng, input_dim, units, scale=0.5):
    return LstmCellParams(rng.uniform(-scale, scale, (input_dim, 4 * units)),
                          rng.uniform(-scale, scale, (units, 4 * units)),
                          rng.uniform(-scale, scale, 4 * units))


def test_cell_zero_params():
    p = LstmCellParams.zeros(3, 2)
    h, c, _ = lstm_cell_forward(p, np.ones(3), np.zeros(2), np.zeros(2))
    np.testing.assert_array_equal(h, 0)
    np.testing.assert_array_equal(c, 0)


def test_cell_forget_bias_keeps_memory():
    p = LstmCellParams.zeros(1, 2)
    p.b[0:2] = 50.0  # forget gate
    c_prev = np.array([0.7, -1.3])
    _, c, _ = lstm_cell_forward(p, np.array([1.0]), np.zeros(2), c_prev)
    np.testing.assert_allclose(c, c_prev, atol=1e-12)


def test_cell_matches_scalar_recomputation():
    rng = np.random.default_rng(11)
    p = random_cell(rng, 3, 2)
    x, h0, c0 = rng.standard_normal(3), rng.standard_normal(2), rng.standard_normal(2)
    h, c, _ = lstm_cell_forward(p, x, h0, c0)
    u = 2
    for j in range(u):
        def pre(g):
            col = g * u + j
            return (sum(x[k] * p.W[k, col] for k in range(3)) + sum(h0[k] * p.U[k, col] for k in range(u))
                    + p.b[col])
        f, i, o, cand = sig(pre(0)), sig(pre(1)), sig(pre(2)), math.tanh(pre(3))
        c_j = f * c0[j] + i * cand
        assert c[j] == pytest.approx(c_j, abs=1e-14)
        assert h[j] == pytest.approx(o * math.tanh(c_j), abs=1e-14)


def test_layer_equals_unrolled_cells():
    rng = np.random.default_rng(2)
    p = random_cell(rng, 2, 3)
    seq = rng.standard_normal((3, 2))
    out, _ = lstm_layer_forward(p, seq, return_sequences=True)
    h, c = np.zeros(3), np.zeros(3)
    for t in range(3):
        h, c, _ = lstm_cell_forward(p, seq[t], h, c)
        np.testing.assert_array_equal(out[t], h)
    last, _ = lstm_layer_forward(p, seq, return_sequences=False)
    np.testing.assert_array_equal(last, h)
    zero, _ = lstm_layer_forward(LstmCellParams.zeros(2, 3), seq)
    np.testing.assert_array_equal(zero, 0)


def test_layer_rejects_empty_and_bad_dims():
    p = LstmCellParams.zeros(2, 3)
    with pytest.raises(ValueError):
        lstm_layer_forward(p, np.zeros((0, 2)))
    with pytest.raises(ValueError):
        lstm_cell_forward(p, np.zeros(3), np.zeros(3), np.zeros(3))


def test_bidirectional_composition_and_symmetry():
    rng = np.random.default_rng(5)
    pf, pb = random_cell(rng, 2, 3), random_cell(rng, 2, 3)
    seq = rng.standard_normal((4, 2))
    out, _ = bidirectional_forward(pf, pb, seq)
    f, _ = lstm_layer_forward(pf, seq, False)
    b, _ = lstm_layer_forward(pb, seq[::-1], False)
    np.testing.assert_array_equal(out, np.concatenate([f, b]))
    assert out.shape == (6,)
    pal = np.array([[1.0, 2.0], [3.0, -1.0], [1.0, 2.0]])
    sym, _ = bidirectional_forward(pf, pf, pal)
    np.testing.assert_array_equal(sym[:3], sym[3:])


def test_model_shapes_and_zero_model():
    spec = ModelSpec(units=(4, 3), nlags=5, input_dim=2, output_dim=2, msteps=3)
    params = {k: np.zeros(s) for k, s in spec.param_shapes().items()}
    out = model_forward(spec, params, np.ones((7, 5, 2)))
    assert out.shape == (7, 3, 2)
    np.testing.assert_array_equal(out, 0)
    assert not any(k.startswith("enc2") for k in params)


def test_model_equals_manual_composition():
    spec = ModelSpec(units=(3, 2), nlags=4, input_dim=1, msteps=2)
    params = init_params(spec, seed=1, scale=0.5)
    X = np.random.default_rng(0).standard_normal((2, 4, 1))
    cell = lambda pre: LstmCellParams(params[pre + "W"], params[pre + "U"], params[pre + "b"])  # noqa: E731
    h1, _ = lstm_layer_forward(cell("enc0."), X, True)
    h2, _ = lstm_layer_forward(cell("enc1."), h1, False)
    hd, _ = lstm_layer_forward(cell("dec."), np.repeat(h2[:, None], 2, axis=1), True)
    expected = hd @ params["head.W"].T + params["head.b"]
    np.testing.assert_array_equal(model_forward(spec, params, X), expected)


def test_loss_examples():
    assert compute_loss("mse", np.zeros(3), np.zeros(3))[0] == 0
    np.testing.assert_array_equal(compute_loss("mae", np.zeros(3), np.zeros(3))[1], 0)
    pred, y = np.array([1.0, -1.0]), np.zeros(2)
    assert compute_loss("mse", pred, y)[0] == 1.0
    assert compute_loss("mae", pred, y)[0] == 1.0
    np.testing.assert_array_equal(compute_loss("mse", pred, y)[1], [1.0, -1.0])
    with pytest.raises(ValueError):
        compute_loss("mse", np.zeros(2), np.zeros(3))
    with pytest.raises(ValueError):
        compute_loss("mae", np.zeros(0), np.zeros(0))


def fd_check(spec, seed=0, h=1e-5):
    params = init_params(spec, seed=seed, scale=0.5)
    rng = np.random.default_rng(seed + 100)
    X = rng.standard_normal((2, spec.nlags, spec.input_dim))
    w = rng.standard_normal((2, spec.msteps, spec.output_dim))
    out, cache = model_forward(spec, params, X, with_cache=True)
    grads = model_backward(spec, params, cache, w)
    assert list(grads) == list(params)
    worst = 0.0
    for name, p in params.items():
        fd = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = np.sum(w * model_forward(spec, params, X))
            p[idx] = old - h
            dn = np.sum(w * model_forward(spec, params, X))
            p[idx] = old
            fd[idx] = (up - dn) / (2 * h)
        denom = np.linalg.norm(fd) + np.linalg.norm(grads[name])
        rel = np.linalg.norm(fd - grads[name]) / denom if denom > 0 else 0.0
        worst = max(worst, rel)
    return worst


@pytest.mark.parametrize("variant", ["vanilla", "bidirectional"])
@pytest.mark.parametrize("nlayers", [1, 2])
@pytest.mark.parametrize("msteps", [1, 2])
def test_gradient_check(variant, nlayers, msteps):
    spec = ModelSpec(units=(2,) * nlayers, nlags=3, input_dim=2, output_dim=1, msteps=msteps, variant=variant)
    assert fd_check(spec) < 1e-4


@pytest.mark.parametrize("act", ["sigmoid", "softmax"])
def test_gradient_check_other_activations(act):
    spec = ModelSpec(units=(2, 2), nlags=3, msteps=2, activation=act)
    assert fd_check(spec, seed=3) < 1e-4


def test_zero_upstream_gradient():
    spec = ModelSpec(units=(2,), nlags=3)
    params = init_params(spec, 0)
    _, cache = model_forward(spec, params, np.ones((2, 3, 1)), with_cache=True)
    for g in model_backward(spec, params, cache, np.zeros((2, 1, 1))).values():
        np.testing.assert_array_equal(g, 0)
    with pytest.raises(ValueError, match="missing forward cache"):
        model_backward(spec, params, None, np.zeros((2, 1, 1)))


def test_optimizer_examples():
    p, _ = optimizer_step(None, "sgd", {"w": np.array([1.0])}, {"w": np.array([0.5])}, 0.1)
    assert p["w"][0] == pytest.approx(0.95)
    p, _ = optimizer_step(None, "adam", {"w": np.array([0.0])}, {"w": np.array([1.0])}, 1e-3)
    assert p["w"][0] == pytest.approx(-1e-3, abs=1e-5)
    # adagrad with constant gradient: step t is lr*g/sqrt(t*g^2)
    params, state, prev = {"w": np.array([0.0])}, None, 0.0
    for t in range(1, 6):
        params, state = optimizer_step(state, "adagrad", params, {"w": np.array([2.0])}, 0.1)
        step = prev - params["w"][0]
        assert step == pytest.approx(0.1 * 2.0 / (math.sqrt(t * 4.0) + 1e-7), rel=1e-9)
        prev = params["w"][0]
    p, _ = optimizer_step(None, "rmsprop", {"w": np.array([0.0])}, {"w": np.array([1.0])}, 1e-3)
    assert p["w"][0] == pytest.approx(-1e-3 / (math.sqrt(0.1) + 1e-7))
    with pytest.raises(ValueError):
        optimizer_step(None, "lbfgs", {"w": np.zeros(1)}, {"w": np.zeros(1)}, 0.1)


def _sine_tensors(nlags, n=400):
    y = np.sin(2 * np.pi * np.arange(n) / 20)[:, None]
    scaled = fit_normalizer(y).transform(y)
    return window_panel(scaled, nlags, 1, 1, 1)


def test_train_epochs_zero_returns_init():
    spec = ModelSpec(units=(4,), nlags=5)
    t = _sine_tensors(5, 60)
    model = train(spec, t.X3, t.Y3, TrainConfig(epochs=0, seed=9))
    assert model.history == []
    for k, v in init_params(spec, 9).items():
        np.testing.assert_array_equal(model.params[k], v)


def test_train_is_deterministic():
    spec = ModelSpec(units=(4, 3), nlags=5, variant="bidirectional")
    t = _sine_tensors(5, 80)
    cfg = TrainConfig(epochs=3, seed=1)
    a, b = train(spec, t.X3, t.Y3, cfg), train(spec, t.X3, t.Y3, cfg)
    assert a.history == b.history
    for k in a.params:
        assert a.params[k].tobytes() == b.params[k].tobytes()


def test_validation_needs_a_row():
    spec = ModelSpec(units=(2,), nlags=2)
    with pytest.raises(ValueError):
        train(spec, np.zeros((1, 2, 1)), np.zeros((1, 1, 1)), TrainConfig(epochs=1))


def test_sine_convergence():
    y = np.sin(2 * np.pi * np.arange(400) / 20)
    nlags = automal(y).lags
    t = _sine_tensors(nlags)
    spec = ModelSpec(units=(16,), nlags=nlags)
    model = train(spec, t.X3, t.Y3, TrainConfig(epochs=100, batch_size=8, learning_rate=1e-3, seed=0))
    assert model.history[-1]["loss"] < 1e-3
    assert model.history[-1]["val_mae"] < model.history[0]["val_mae"]
    assert isinstance(model, ForecastModel)
