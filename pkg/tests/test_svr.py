import math
import random

import numpy as np
import pytest

import flowcast._smo_py as smo_py
from flowcast.svr import (RBF, LINEAR, Kernel, SolverError, SVRModel,
                          default_epsilon, grid_search, train_svr)

try:
    import flowcast._smo as smo_c
except ImportError:
    smo_c = None


def line_data(n=200):
    x = np.linspace(0.0, 1.0, n)[:, None]
    return x, 2.0 * x[:, 0] + 1.0


def test_single_example_fits_inside_tube():
    x = np.array([[0.3, 0.7]])
    y = np.array([5.0])
    model = train_svr(x, y, Kernel(RBF, 1.0), C=1.0, epsilon=0.25)
    assert abs(model.predict(x[0]) - 5.0) <= 0.25


def test_linear_line_fit_within_tube():
    X, y = line_data()
    model = train_svr(X, y, Kernel(LINEAR), C=100.0, epsilon=0.01, tol=1e-3)
    residuals = np.abs(model.predict_batch(X) - y)
    assert residuals.max() <= 0.01 + 1e-3
    assert model.meta["converged"]


@pytest.mark.parametrize("kernel", [Kernel(LINEAR), Kernel(RBF, 0.7)])
def test_constant_targets_fit_flat(kernel):
    rng = np.random.default_rng(2)
    X = rng.uniform(-1, 1, size=(40, 3))
    y = np.full(40, 123.0)
    model = train_svr(X, y, kernel, C=5.0, epsilon=0.5)
    assert np.all(np.abs(model.predict_batch(X) - 123.0) <= 0.5 + 1e-9)


def test_zero_coefficient_model_predicts_bias():
    model = SVRModel(Kernel(LINEAR), C=1.0, epsilon=0.1,
                     support_vectors=np.zeros((0, 2)), coef=np.zeros(0), bias=4.5)
    assert model.predict(np.array([9.0, -3.0])) == 4.5
    assert np.all(model.predict_batch(np.zeros((3, 2))) == 4.5)


def test_support_vector_residuals():
    X, y = line_data()
    model = train_svr(X, y, Kernel(LINEAR), C=100.0, epsilon=0.01)
    for sv in model.support_vectors:
        target = 2.0 * sv[0] + 1.0
        assert abs(model.predict(sv) - target) <= 0.01 + 1e-3


def test_rbf_far_from_support_vectors_returns_bias():
    rng = np.random.default_rng(3)
    X = rng.uniform(0, 1, size=(60, 2))
    y = np.sin(X[:, 0] * 3) + X[:, 1]
    model = train_svr(X, y, Kernel(RBF, 1.0), C=10.0, epsilon=0.01)
    far = np.array([500.0, -500.0])  # distance >> 1/sqrt(gamma)
    assert model.predict(far) == pytest.approx(model.bias, abs=1e-12)


def test_dual_feasibility():
    rng = np.random.default_rng(4)
    for _ in range(5):
        X = rng.uniform(-2, 2, size=(50, 2))
        y = X[:, 0] ** 2 + rng.normal(0, 0.1, 50)
        C = float(rng.choice([0.5, 2.0, 20.0]))
        model = train_svr(X, y, Kernel(RBF, 0.5), C=C, epsilon=0.05)
        assert abs(model.coef.sum()) <= 1e-2
        assert model.coef.max(initial=0) <= C + 1e-12
        assert model.coef.min(initial=0) >= -C - 1e-12
        assert abs(model.meta["constraint_residual"]) <= 1e-10


def test_kernel_properties():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(20, 4))
    for kernel in (Kernel(LINEAR), Kernel(RBF, 0.3)):
        K = kernel.matrix(X)
        assert np.allclose(K, K.T)
    K = Kernel(RBF, 0.3).matrix(X)
    assert np.all(K > 0)
    assert np.allclose(np.diag(K), 1.0)


def test_dual_objective_is_non_decreasing():
    rng = np.random.default_rng(6)
    X = rng.uniform(-1, 1, size=(80, 2))
    y = 3 * X[:, 0] - X[:, 1] + rng.normal(0, 0.05, 80)
    model = train_svr(X, y, Kernel(RBF, 1.0), C=10.0, epsilon=0.01,
                      record_objective=True)
    objectives = model.meta["objectives"]
    assert len(objectives) == model.meta["iterations"] + 1
    diffs = np.diff(objectives)
    assert np.all(diffs >= -1e-9)
    assert objectives[-1] > objectives[0]


def test_training_is_deterministic():
    X, y = line_data(50)
    m1 = train_svr(X, y, Kernel(RBF, 2.0), C=10.0, epsilon=0.01)
    m2 = train_svr(X, y, Kernel(RBF, 2.0), C=10.0, epsilon=0.01)
    assert np.array_equal(m1.coef, m2.coef)
    assert m1.bias == m2.bias
    assert m1.meta["iterations"] == m2.meta["iterations"]


@pytest.mark.skipif(smo_c is None, reason="compiled solver not built")
def test_backends_agree():
    rng = np.random.default_rng(7)
    X = rng.uniform(-2, 2, size=(120, 3))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1]
    K = Kernel(RBF, 0.8).matrix(X)
    for C, eps in ((1.0, 0.01), (50.0, 0.1)):
        beta_c, b_c, it_c, gap_c, _ = smo_c.solve(K, y, C, eps, 1e-3, 10 ** 6, False)
        beta_p, b_p, it_p, gap_p, _ = smo_py.solve(K, y, C, eps, 1e-3, 10 ** 6, False)
        assert it_c == it_p
        assert np.array_equal(beta_c, beta_p)
        assert b_c == b_p


def test_default_epsilon_scales_with_targets():
    y = np.array([0.0, 100.0, 200.0, 300.0])
    assert default_epsilon(y) == pytest.approx(0.01 * np.std(y))
    assert default_epsilon(np.full(5, 9.0)) == 0.0


def test_input_validation():
    X, y = line_data(10)
    with pytest.raises(ValueError):
        train_svr(np.zeros((0, 2)), np.zeros(0), Kernel(LINEAR), C=1.0)
    with pytest.raises(ValueError):
        train_svr(X, np.append(y[:-1], np.nan), Kernel(LINEAR), C=1.0)
    with pytest.raises(ValueError):
        train_svr(X, y, Kernel(LINEAR), C=0.0)
    with pytest.raises(ValueError):
        train_svr(X, y, Kernel(LINEAR), C=1.0, epsilon=-0.5)
    with pytest.raises(ValueError):
        Kernel(RBF)  # gamma required
    with pytest.raises(ValueError):
        Kernel("poly")
    model = train_svr(X, y, Kernel(LINEAR), C=1.0)
    with pytest.raises(ValueError):
        model.predict(np.zeros(5))


def test_grid_search_single_combination():
    X, y = line_data(30)
    C, gamma, model = grid_search(X, y, folds=3, C_grid=(7.0,), gamma_grid=(0.4,))
    assert (C, gamma) == (7.0, 0.4)
    assert model.kernel.gamma == 0.4


def test_grid_search_finds_planted_bandwidth():
    # targets generated by an RBF expansion with known bandwidth: the
    # matching gamma should win validation against far-off bandwidths
    rng = np.random.default_rng(9)
    centres = rng.uniform(-2, 2, size=(6, 1))
    weights = rng.uniform(1.0, 2.0, size=6)
    gamma_true = 1.0
    X = rng.uniform(-2, 2, size=(150, 1))

    def f(pts):
        d = (pts[:, None, :] - centres[None, :, :]) ** 2
        return (weights * np.exp(-gamma_true * d.sum(axis=2))).sum(axis=1) + 5.0

    y = f(X)
    C, gamma, _ = grid_search(X, y, folds=3, C_grid=(100.0,),
                              gamma_grid=(0.001, 1.0, 500.0), epsilon=0.01, seed=1)
    assert gamma == 1.0


def test_grid_search_deterministic():
    X, y = line_data(40)
    first = grid_search(X, y, folds=4, C_grid=(1.0, 10.0), gamma_grid=(0.1, 1.0), seed=3)
    second = grid_search(X, y, folds=4, C_grid=(1.0, 10.0), gamma_grid=(0.1, 1.0), seed=3)
    assert first[:2] == second[:2]
    assert np.array_equal(first[2].coef, second[2].coef)


def test_grid_search_validation():
    X, y = line_data(10)
    with pytest.raises(ValueError):
        grid_search(X, y, folds=1)
    with pytest.raises(ValueError):
        grid_search(X[:3], y[:3], folds=5)
    with pytest.raises(ValueError):
        grid_search(X, y, folds=2, C_grid=())


def test_model_dict_round_trip():
    X, y = line_data(25)
    model = train_svr(X, y, Kernel(RBF, 0.5), C=3.0, epsilon=0.02)
    clone = SVRModel.from_dict(model.to_dict())
    probe = np.array([0.37])
    assert clone.predict(probe) == model.predict(probe)
    assert clone.bias == model.bias
