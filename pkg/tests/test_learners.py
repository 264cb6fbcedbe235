import numpy as np
import pytest

from additr.exceptions import InvalidInputError
from additr.learners import Learner, fit_learner


def test_learner_kind_validated():
    with pytest.raises(InvalidInputError):
        Learner("forest")


def test_ridge_recovers_exact_linear_signal():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 5))
    y = 0.5 + X @ np.array([1.0, 2.0, -1.0, 0.0, 3.0])
    model = fit_learner(Learner("ridge", {"alpha": 1e-8}), X, y, "regression", 0)
    assert np.max(np.abs(model.predict(X) - y)) < 1e-3


def test_boosted_trees_learn_step_function():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(500, 3))
    y = (X[:, 0] > 0).astype(float)
    model = fit_learner(Learner("boosted_stumps"), X, y, "regression", 1)
    miscls = np.mean((model.predict(X) > 0.5) != (y > 0.5))
    assert miscls < 0.05


def test_constant_response_gives_constant_model():
    X = np.random.default_rng(3).normal(size=(30, 2))
    model = fit_learner(Learner("boosted_stumps"), X, np.full(30, 2.5), "regression", 0)
    assert model.predict(X[:5]) == pytest.approx(np.full(5, 2.5))
    binary = fit_learner(Learner("ridge"), X, np.ones(30), "binary", 0)
    probs = binary.predict(X[:5])
    assert np.all(probs < 1.0) and np.all(probs > 0.99)


def test_binary_task_returns_probabilities():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(300, 4))
    eta = 1.5 * X[:, 0] - X[:, 1]
    y = (rng.random(300) < 1 / (1 + np.exp(-eta))).astype(float)
    for kind in ("ridge", "lasso", "boosted_stumps"):
        model = fit_learner(Learner(kind), X, y, "binary", 7)
        p = model.predict(X)
        assert np.all((p > 0) & (p < 1))
        assert np.corrcoef(p, eta)[0, 1] > 0.5


def test_logistic_ridge_tracks_true_probabilities():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(800, 3))
    eta = 2.0 * X[:, 0] - X[:, 1]
    truth = 1 / (1 + np.exp(-eta))
    y = (rng.random(800) < truth).astype(float)
    model = fit_learner(Learner("ridge", {"alpha": 0.01}), X, y, "binary", 0)
    assert np.mean(np.abs(model.predict(X) - truth)) < 0.06


def test_lasso_learner_shrinks_noise_columns():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(150, 10))
    y = 3 * X[:, 0] + 0.1 * rng.standard_normal(150)
    model = fit_learner(Learner("lasso"), X, y, "regression", 2)
    assert np.corrcoef(model.predict(X), y)[0, 1] > 0.99


def test_determinism_given_seed():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(120, 4))
    y = X[:, 0] ** 2 + rng.standard_normal(120)
    a = fit_learner(Learner("boosted_stumps", {"rounds": 50}), X, y, "regression", 42)
    b = fit_learner(Learner("boosted_stumps", {"rounds": 50}), X, y, "regression", 42)
    assert np.array_equal(a.predict(X), b.predict(X))


def test_minimum_rows_enforced():
    X = np.random.default_rng(0).normal(size=(5, 2))
    with pytest.raises(InvalidInputError):
        fit_learner(Learner("ridge"), X, np.ones(5), "regression", 0)
