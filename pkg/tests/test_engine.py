import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsallis_fin.engine import (AttentionSpec, Dense, DenseSpec, DropoutSpec, EarlyStopping,
                                NetworkSpec, OptimizerState, Parameter, PlateauScheduler, Tensor,
                                TrainConfig, attention_weights, bce_with_logits, build_network,
                                dense_forward, dropout_forward, early_stop_check,
                                feature_attention, fit, l1_loss, lr_on_plateau, mlp_spec, mse_loss,
                                no_grad, sgd_step, softmax_cross_entropy, temporal_attention)
from tsallis_fin.engine import tensor as T
from tsallis_fin.errors import ConfigError, DomainError, GraphStateError, ShapeError

from gradcheck import check_gradients

GRAD_TOL = 1e-4


# dense forward

def test_dense_forward_examples():
    layer = Dense(np.array([[1.0, 2.0], [3.0, 4.0]]), np.zeros(2), "identity")
    np.testing.assert_array_equal(dense_forward(layer, [1.0, 1.0]).data, [3.0, 7.0])

    relu = Dense(np.eye(2), np.array([-1.0, 2.0]), "relu")
    np.testing.assert_array_equal(dense_forward(relu, [0.0, 0.0]).data, [0.0, 2.0])

    ident = Dense(np.eye(3), np.zeros(3), "identity")
    x = np.array([0.3, -1.2, 5.0])
    np.testing.assert_array_equal(dense_forward(ident, x).data, x)


def test_dense_shape_mismatch():
    layer = Dense(np.ones((2, 3)), np.zeros(2))
    with pytest.raises(ShapeError):
        dense_forward(layer, np.ones(4))


def test_dense_rejects_inconsistent_bias():
    with pytest.raises(ShapeError):
        Dense(np.ones((2, 3)), np.zeros(3))


# backward

def test_single_layer_mse_gradient_closed_form():
    rng = np.random.default_rng(0)
    w, b = rng.normal(size=(1, 3)), rng.normal(size=1)
    layer = Dense(w, b, "identity")
    x, y = rng.normal(size=(1, 3)), np.array([[0.7]])
    pred = layer(x)
    mse_loss(pred, y).backward()
    resid = pred.data - y
    np.testing.assert_allclose(layer.weight.grad, 2 * resid @ x, atol=1e-14)
    np.testing.assert_allclose(layer.bias.grad, 2 * resid[0], atol=1e-14)


def test_zero_upstream_gradient_gives_zero_grads():
    net = build_network(mlp_spec(4, [5], 2, seed=1))
    out = net(np.random.default_rng(1).normal(size=(3, 4)))
    out.backward(np.zeros_like(out.data))
    for p in net.parameters():
        np.testing.assert_array_equal(p.grad, 0.0)


def test_backward_without_forward_is_state_error():
    with pytest.raises(GraphStateError):
        Parameter(np.ones(3)).backward(np.ones(3))
    net = build_network(mlp_spec(2, [3], 1))
    loss = mse_loss(net(np.ones((1, 2))), np.zeros((1, 1)))
    loss.backward()
    with pytest.raises(GraphStateError):
        loss.backward()


def test_no_grad_records_nothing():
    net = build_network(mlp_spec(2, [3], 1))
    with no_grad():
        out = net(np.ones((1, 2)))
    with pytest.raises(GraphStateError):
        out.backward(np.ones((1, 1)))


@pytest.mark.parametrize("act", ["identity", "relu", "sigmoid", "softmax"])
def test_gradcheck_dense_activations(act):
    rng = np.random.default_rng(11)
    layer = Dense.init(rng, 4, 3, act)
    x = Tensor(rng.normal(size=(5, 4)), requires_grad=True)
    y = rng.normal(size=(5, 3))
    err = check_gradients(lambda: mse_loss(layer(x), y), layer.parameters() + [x])
    assert err < GRAD_TOL


def test_gradcheck_two_layer_relu():
    rng = np.random.default_rng(12)
    net = build_network(mlp_spec(3, [6], 2, seed=12))
    x, y = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
    assert check_gradients(lambda: mse_loss(net(x), y), net.parameters()) < GRAD_TOL


def test_gradcheck_three_layer_network_all_losses():
    rng = np.random.default_rng(13)
    net = build_network(mlp_spec(5, [7, 4], 3, activation="sigmoid", seed=13))
    x = rng.normal(size=(6, 5))
    y = rng.normal(size=(6, 3))
    labels = rng.integers(0, 3, 6)
    for build in (lambda: mse_loss(net(x), y),
                  lambda: l1_loss(net(x), y),
                  lambda: softmax_cross_entropy(net(x), labels)):
        assert check_gradients(build, net.parameters()) < GRAD_TOL


def test_gradcheck_bce():
    rng = np.random.default_rng(14)
    net = build_network(mlp_spec(4, [5], 1, seed=14))
    x, y = rng.normal(size=(8, 4)), rng.integers(0, 2, (8, 1)).astype(float)
    assert check_gradients(lambda: bce_with_logits(net(x), y), net.parameters()) < GRAD_TOL


def test_gradcheck_dropout_eval_mode():
    rng = np.random.default_rng(15)
    spec = NetworkSpec(4, [DenseSpec(6), DropoutSpec(0.5), DenseSpec(2, "identity")], 2, seed=15)
    net = build_network(spec)
    x, y = rng.normal(size=(3, 4)), rng.normal(size=(3, 2))
    assert check_gradients(lambda: mse_loss(net(x, training=False), y), net.parameters()) < GRAD_TOL


def test_gradcheck_dropout_fixed_mask():
    rng = np.random.default_rng(16)
    x = Tensor(rng.normal(size=(4, 5)), requires_grad=True)
    y = rng.normal(size=(4, 5))

    def build():
        return mse_loss(dropout_forward(x, 0.3, True, np.random.default_rng(99)), y)

    assert check_gradients(build, [x]) < GRAD_TOL


def test_gradcheck_attention_blocks():
    rng = np.random.default_rng(17)
    spec = NetworkSpec((4, 3), [AttentionSpec("temporal"), DenseSpec(5),
                                AttentionSpec("feature"), DenseSpec(1, "identity")], 1, seed=17)
    net = build_network(spec)
    x, y = rng.normal(size=(6, 4, 3)), rng.normal(size=(6, 1))
    assert check_gradients(lambda: mse_loss(net(x), y), net.parameters()) < GRAD_TOL


def test_gradcheck_elementwise_ops():
    rng = np.random.default_rng(18)
    a = Tensor(rng.uniform(0.5, 2.0, (3, 4)), requires_grad=True)
    b = Tensor(rng.uniform(0.5, 2.0, (1, 4)), requires_grad=True)

    def build():
        z = T.div(T.exp(T.mul(a, b)), T.add(b, 1.0))
        z = T.sub(T.log(T.add(z, 1.0)), T.square(a))
        z = T.concat([z, T.swapaxes(T.reshape(a, (4, 3)), 0, 1)], axis=0)
        return T.mean(T.sum_(z, axis=1))

    assert check_gradients(build, [a, b]) < GRAD_TOL


def test_gradcheck_minmax_sort_max_min():
    rng = np.random.default_rng(19)
    x = Tensor(rng.normal(size=(5, 6)), requires_grad=True)
    w = rng.normal(size=(5, 6))

    def build():
        n = T.sort(T.minmax_normalize(x))
        return T.add(T.sum_(T.mul(n, w)), T.sum_(T.sub(T.max_(x), T.min_(x))))

    assert check_gradients(build, [x]) < GRAD_TOL


def test_gradcheck_tsallis_node():
    rng = np.random.default_rng(20)
    u = Tensor(rng.normal(size=(4, 7)), requires_grad=True)
    q = Parameter(1.8)
    tau = Parameter(0.6)
    w = rng.normal(size=4)
    assert check_gradients(lambda: T.sum_(T.mul(T.tsallis(u, q, tau), w)), [u, q, tau], h=1e-6) < GRAD_TOL


def test_gradcheck_randomized_small_shapes():
    rng = np.random.default_rng(21)
    for trial in range(10):
        n_in, n_h, n_out = (int(v) for v in rng.integers(1, 6, 3))
        acts = ["relu", "sigmoid", "identity"]
        spec = mlp_spec(n_in, [n_h], n_out, activation=acts[trial % 3], seed=trial)
        net = build_network(spec)
        x, y = rng.normal(size=(3, n_in)), rng.normal(size=(3, n_out))
        assert check_gradients(lambda: mse_loss(net(x), y), net.parameters()) < GRAD_TOL


# losses

def test_l1_examples():
    assert float(l1_loss(np.array(0.5), np.array(0.3))) == pytest.approx(0.2, abs=1e-15)
    assert float(l1_loss(np.ones(3), np.ones(3))) == 0.0
    assert float(l1_loss(np.array([1.0, -1.0]), np.zeros(2))) == 1.0


def test_l1_subgradient_zero_at_zero():
    p = Parameter(np.array([1.0, 2.0]))
    l1_loss(p, np.array([1.0, 0.0])).backward()
    np.testing.assert_array_equal(p.grad, [0.0, 0.5])


def test_mse_examples():
    assert float(mse_loss(np.array([3.0, 4.0]), np.zeros(2))) == 12.5
    assert float(mse_loss(np.ones(4), np.ones(4))) == 0.0
    assert float(mse_loss(np.array(2.0), np.array(0.0))) == 4.0


def test_loss_shape_mismatch():
    with pytest.raises(ShapeError):
        l1_loss(np.ones(3), np.ones(2))
    with pytest.raises(ShapeError):
        mse_loss(np.ones((2, 1)), np.ones(2))


# dropout

def test_dropout_identity_cases():
    x = np.arange(6.0).reshape(2, 3)
    rng = np.random.default_rng(0)
    np.testing.assert_array_equal(dropout_forward(x, 0.0, True, rng).data, x)
    np.testing.assert_array_equal(dropout_forward(x, 0.5, False, rng).data, x)


@pytest.mark.parametrize("rate", [-0.1, 1.0, 1.5])
def test_dropout_rate_range(rate):
    with pytest.raises(DomainError):
        dropout_forward(np.ones(2), rate, True, np.random.default_rng(0))


def test_dropout_unbiased_monte_carlo():
    x = np.array([1.0, -2.0, 0.5, 3.0])
    rng = np.random.default_rng(123)
    trials = 100_000
    draws = dropout_forward(np.broadcast_to(x, (trials, 4)).copy(), 0.5, True, rng).data
    # each draw is 0 or 2x with equal odds: sd = |x|
    sigma = np.abs(x) / math.sqrt(trials)
    assert np.all(np.abs(draws.mean(axis=0) - x) < 3 * sigma)


# attention

def test_attention_zero_scores_gives_mean():
    x = np.random.default_rng(0).normal(size=(5, 3))
    out = temporal_attention(x, np.zeros((1, 3)), np.zeros(1))
    np.testing.assert_allclose(out.data, x.mean(axis=0), atol=1e-15)


def test_attention_single_timestep():
    x = np.array([[1.5, -2.0, 0.25]])
    out = temporal_attention(x, np.array([[0.3, 0.1, -0.7]]), np.array([0.2]))
    np.testing.assert_array_equal(out.data, x[0])


def test_attention_saturation():
    x = np.random.default_rng(1).normal(size=(4, 3))
    x[2, 0] = 60.0
    w = np.array([[1.0, 0.0, 0.0]])
    out = temporal_attention(x, w, np.zeros(1))
    np.testing.assert_allclose(out.data, x[2], atol=1e-12)


def test_feature_attention_uniform_gate():
    x = np.array([[2.0, 4.0, 6.0, 8.0]])
    out = feature_attention(x, np.zeros((4, 4)), np.zeros(4))
    np.testing.assert_allclose(out.data, x / 4)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**16))
def test_attention_rows_sum_to_one(t, f, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(0, 3, (2, t, f))
    a = attention_weights(x, rng.normal(size=(1, f)), rng.normal(size=1), temporal=True)
    np.testing.assert_allclose(a.sum(axis=-1), 1.0, atol=1e-12)
    g = attention_weights(x.reshape(2, -1), rng.normal(size=(t * f, t * f)),
                          rng.normal(size=t * f), temporal=False)
    np.testing.assert_allclose(g.sum(axis=-1), 1.0, atol=1e-12)


def test_attention_shape_error():
    with pytest.raises(ShapeError):
        temporal_attention(np.ones((3, 4)), np.zeros((1, 3)), np.zeros(1))


# optimizer

def test_sgd_examples():
    p = Parameter(1.0)
    p.grad = np.array(0.5)
    sgd_step([p], OptimizerState(0.1))
    assert float(p.data) == pytest.approx(0.95, abs=1e-15)

    p = Parameter([1.0, 2.0])
    p.grad = np.zeros(2)
    sgd_step([p], OptimizerState(0.1))
    np.testing.assert_array_equal(p.data, [1.0, 2.0])


def test_sgd_linearity():
    a, b = Parameter([0.25, -1.0]), Parameter([0.25, -1.0])
    g = np.array([0.5, 0.125])
    state = OptimizerState(0.5)
    for _ in range(2):
        a.grad = g
        sgd_step([a], state)
    b.grad = 2 * g
    sgd_step([b], state)
    np.testing.assert_array_equal(a.data, b.data)


def test_sgd_skips_frozen():
    p = Parameter([1.0], trainable=False)
    p.grad = np.array([3.0])
    sgd_step([p], OptimizerState(1.0))
    np.testing.assert_array_equal(p.data, [1.0])


def _run_plateau(losses, lr=0.1, factor=0.5, patience=2):
    state = OptimizerState(lr, PlateauScheduler(factor, patience))
    lrs = []
    for v in losses:
        lr_on_plateau(state, v)
        lrs.append(state.learning_rate)
    return lrs


def test_plateau_examples():
    assert _run_plateau([1.0, 1.0, 1.0]) == [0.1, 0.1, 0.05]
    assert _run_plateau([1.0, 0.9, 0.8, 0.7, 0.6]) == [0.1] * 5
    assert _run_plateau([1.0, 0.9, 0.9, 0.9]) == [0.1, 0.1, 0.1, 0.05]


def test_plateau_rejects_bad_settings():
    with pytest.raises(ConfigError):
        PlateauScheduler(factor=1.0)
    with pytest.raises(ConfigError):
        PlateauScheduler(patience=0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=40))
def test_lr_never_increases(losses):
    lrs = _run_plateau(losses)
    assert all(b <= a for a, b in zip(lrs, lrs[1:]))


def _run_stop(losses, patience=3, min_delta=0.0):
    state = OptimizerState(0.1, early_stop=EarlyStopping(patience, min_delta))
    for i, v in enumerate(losses, 1):
        if early_stop_check(state, v, i):
            return i
    return None


def test_early_stop_examples():
    assert _run_stop([1.0, 1.1, 1.1, 1.1]) == 4
    assert _run_stop([1.0 / k for k in range(1, 50)]) is None
    # improvement of exactly min_delta does not count
    assert _run_stop([1.0, 0.5, 0.5], patience=2, min_delta=0.5) == 3
    assert _run_stop([1.0, 0.25, 0.0], patience=2, min_delta=0.5) is None


# training loop

def _toy_problem(seed=0, n=200):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 2))
    y = (x @ np.array([1.5, -2.0]) > 0).astype(float)[:, None]
    return x, y


def test_training_reduces_loss_on_separable_problem():
    x, y = _toy_problem()
    net = build_network(mlp_spec(2, [8], 1, seed=3))
    cfg = TrainConfig(lr=0.1, max_epochs=100, early_stop_patience=200)
    hist = fit(net, bce_with_logits, x, y, x, y, cfg, np.random.default_rng(0), logits=True)
    assert hist.epochs[-1]["train_loss"] < hist.initial_val_loss
    assert len(hist.epochs) == 100


def test_training_is_bit_deterministic():
    x, y = _toy_problem(1)
    states = []
    for _ in range(2):
        spec = NetworkSpec(2, [DenseSpec(6), DropoutSpec(0.2), DenseSpec(1, "identity")], 1, seed=4)
        net = build_network(spec)
        fit(net, mse_loss, x, y, x[:50], y[:50], TrainConfig(lr=0.05, max_epochs=5),
            np.random.default_rng(7))
        states.append(net.state())
    for a, b in zip(*states):
        np.testing.assert_array_equal(a, b)


def test_best_snapshot_restored():
    x, y = _toy_problem(2)
    xv, yv = _toy_problem(3, 60)
    net = build_network(mlp_spec(2, [16], 1, seed=5))
    cfg = TrainConfig(lr=0.3, max_epochs=60, early_stop_patience=5)
    hist = fit(net, mse_loss, x, y, xv, yv, cfg, np.random.default_rng(1))
    from tsallis_fin.engine import evaluate_loss
    history = [hist.initial_val_loss] + [e["val_loss"] for e in hist.epochs]
    assert evaluate_loss(net, mse_loss, xv, yv) == min(history)
    lrs = [e["lr"] for e in hist.epochs]
    assert all(b <= a for a, b in zip(lrs, lrs[1:]))


def test_zero_epochs_keeps_initialization():
    x, y = _toy_problem()
    net = build_network(mlp_spec(2, [4], 1, seed=6))
    before = net.state()
    fit(net, mse_loss, x, y, x, y, TrainConfig(max_epochs=0), np.random.default_rng(0))
    for a, b in zip(before, net.state()):
        np.testing.assert_array_equal(a, b)


# specs

def test_spec_width_validation():
    with pytest.raises(ConfigError):
        NetworkSpec(3, [DenseSpec(4), DenseSpec(2, "identity")], 3).validate()
    with pytest.raises(ConfigError):
        NetworkSpec(3, [DropoutSpec(1.0), DenseSpec(1)], 1).validate()
    spec = NetworkSpec((7, 6), [AttentionSpec("temporal"), DenseSpec(8), DenseSpec(1)], 1)
    assert spec.shapes() == [(48,), (8,), (1,)]


def test_glorot_bounds():
    net = build_network(mlp_spec(30, [20], 10, seed=0))
    w = net.layers[0].weight.data
    assert np.abs(w).max() <= math.sqrt(6 / 50)
    np.testing.assert_array_equal(net.layers[0].bias.data, 0.0)
