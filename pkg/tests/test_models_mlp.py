import numpy as np
import pytest

from co2fuse.errors import TrainingDivergedError
from co2fuse.models import MlpConfig, param_count, train_mlp
from co2fuse.models.mlp import full_loss, init_mlp, loss_and_gradients

from oracles import ols_slope_intercept


def test_param_count_paper_architecture():
    assert param_count(14, (64, 128, 64, 32), 1) == 19_649


def test_param_count_tiny():
    assert param_count(2, (3,), 1) == 13


def test_trained_model_param_count_matches_formula():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(64, 14))
    y = rng.normal(size=64)
    m = train_mlp(X, y, MlpConfig(epochs=1))
    assert m.n_params == 19_649


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    cfg = MlpConfig(hidden_sizes=(5, 4), l2_lambda=0.01)
    model = init_mlp(3, cfg, np.random.default_rng(3), output_bias=0.3)
    X = rng.normal(size=(6, 3))
    y = rng.normal(size=6)
    _, gw, gb = loss_and_gradients(model, X, y)
    h = 1e-5
    for li in range(len(model.weights)):
        for arr, grad in ((model.weights[li], gw[li]), (model.biases[li], gb[li])):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                ix = it.multi_index
                orig = arr[ix]
                arr[ix] = orig + h
                up = full_loss(model, X, y)
                arr[ix] = orig - h
                down = full_loss(model, X, y)
                arr[ix] = orig
                fd = (up - down) / (2 * h)
                denom = max(abs(fd), abs(grad[ix]), 1e-8)
                assert abs(fd - grad[ix]) / denom < 1e-4


def test_zero_weights_loss_is_bias_path_error():
    cfg = MlpConfig(hidden_sizes=(4, 3), l2_lambda=0.0)
    model = init_mlp(2, cfg, np.random.default_rng(0), output_bias=0.7)
    for w in model.weights:
        w[:] = 0.0
    X = np.random.default_rng(1).normal(size=(5, 2))
    y = np.zeros(5)
    loss, _, _ = loss_and_gradients(model, X, y)
    # with all weights zero the output is just the final bias
    assert loss == pytest.approx(0.7**2)


def test_doubling_lambda_adds_weight_norm():
    rng = np.random.default_rng(9)
    cfg = MlpConfig(hidden_sizes=(4,), l2_lambda=0.01)
    model = init_mlp(3, cfg, np.random.default_rng(2))
    X = rng.normal(size=(8, 3))
    y = rng.normal(size=8)
    loss1, _, _ = loss_and_gradients(model, X, y)
    model.l2_lambda = 0.02
    loss2, _, _ = loss_and_gradients(model, X, y)
    wsum = sum(float(np.sum(w**2)) for w in model.weights)
    assert loss2 - loss1 == pytest.approx(0.01 * wsum, rel=1e-12)


def test_fits_linear_target():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(500, 2))
    y = 2.0 * X[:, 0] + 1.0
    m = train_mlp(X, y, MlpConfig(hidden_sizes=(16, 8), epochs=200, l2_lambda=0.0, seed=1))
    pred = m.predict_batch(X, standardized=True)
    rmse = float(np.sqrt(np.mean((pred - y) ** 2)))
    assert rmse < 0.05
    # a linear target is representable: the OLS line is the floor to approach
    slope, intercept = ols_slope_intercept(list(X[:, 0]), list(y))
    assert (slope, intercept) == (pytest.approx(2.0), pytest.approx(1.0))


def test_loss_trace_recorded_and_decreasing_overall():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(128, 3))
    y = X @ np.array([1.0, -2.0, 0.5])
    m = train_mlp(X, y, MlpConfig(hidden_sizes=(8,), epochs=30, l2_lambda=0.0))
    assert len(m.loss_trace) == 30
    assert m.loss_trace[-1] < m.loss_trace[0]


def test_divergence_reports_epoch():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(64, 3))
    y = rng.normal(size=64) * 100
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(TrainingDivergedError, match="epoch"):
            train_mlp(X, y, MlpConfig(hidden_sizes=(8,), learning_rate=1e4, epochs=20))


def test_deterministic_under_seed():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(96, 4))
    y = rng.normal(size=96)
    a = train_mlp(X, y, MlpConfig(hidden_sizes=(8, 4), epochs=5, seed=3))
    b = train_mlp(X, y, MlpConfig(hidden_sizes=(8, 4), epochs=5, seed=3))
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)


def test_config_validation():
    with pytest.raises(ValueError):
        MlpConfig(hidden_sizes=())
    with pytest.raises(ValueError):
        MlpConfig(momentum=1.0)
    with pytest.raises(ValueError):
        MlpConfig(learning_rate=0.0)
