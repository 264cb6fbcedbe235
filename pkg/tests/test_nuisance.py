import numpy as np
import pytest

from additr.exceptions import InvalidInputError
from additr.learners import Learner
from additr.nuisance import crossfit_nuisance, make_folds
from additr.pipeline import Dataset

RIDGE = {"propensity": Learner("ridge"), "outcome": Learner("ridge")}


def test_make_folds_exact_division():
    part = make_folds(10, 5, 0)
    assert sorted(np.bincount(part.fold_of)) == [2, 2, 2, 2, 2]


def test_make_folds_remainder_spread():
    part = make_folds(11, 5, 1)
    assert sorted(np.bincount(part.fold_of)) == [2, 2, 2, 2, 3]


def test_make_folds_deterministic():
    a = make_folds(40, 4, 123)
    b = make_folds(40, 4, 123)
    assert np.array_equal(a.fold_of, b.fold_of)
    c = make_folds(40, 4, 124)
    assert not np.array_equal(a.fold_of, c.fold_of)


def test_make_folds_rejects_bad_k():
    with pytest.raises(InvalidInputError):
        make_folds(5, 6, 0)
    with pytest.raises(InvalidInputError):
        make_folds(5, 1, 0)


def make_randomized_data(seed, n=1000, p=5):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2, 2, size=(n, p))
    a = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    m = X.sum(axis=1)
    y = m + 0.5 * a + rng.standard_normal(n)
    return Dataset(X=X, y=y, a=a), m


def test_crossfit_propensity_near_half_under_randomization():
    data, _ = make_randomized_data(0)
    nu = crossfit_nuisance(data, 5, RIDGE, seed=1)
    assert np.mean(np.abs(nu.pi_treat - 0.5)) < 0.05


def test_crossfit_recovers_linear_main_effect():
    # noise-free y = m(x): the averaged arm regressions recover m
    rng = np.random.default_rng(3)
    n = 1000
    X = rng.uniform(-2, 2, size=(n, 5))
    a = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    m = X.sum(axis=1)
    data = Dataset(X=X, y=m.copy(), a=a)
    nu = crossfit_nuisance(data, 5, RIDGE, seed=2)
    assert np.mean(np.abs(nu.m_hat - m)) < 0.1


def test_arm_identity_and_clipping():
    data, _ = make_randomized_data(5, n=300)
    nu = crossfit_nuisance(data, 5, RIDGE, eps_clip=0.1, seed=0)
    expected = np.where(data.a == 1.0, nu.pi_treat, 1.0 - nu.pi_treat)
    assert np.array_equal(nu.pi_observed, expected)
    assert np.all(nu.pi_treat >= 0.1) and np.all(nu.pi_treat <= 0.9)


def test_fold_exclusion_audit():
    data, _ = make_randomized_data(7, n=400)
    nu = crossfit_nuisance(data, 4, RIDGE, seed=9)
    for k in range(4):
        corrupted = Dataset(
            X=data.X,
            y=np.where(nu.fold_of == k, data.y + 100.0, data.y),
            a=data.a,
        )
        nu2 = crossfit_nuisance(corrupted, 4, RIDGE, seed=9)
        held = nu2.fold_of == k
        # fold k's own predictions come from models that never saw fold k
        assert np.array_equal(nu2.m_hat[held], nu.m_hat[held])
        assert np.array_equal(nu2.mu_ref_hat[held], nu.mu_ref_hat[held])
        assert not np.array_equal(nu2.m_hat[~held], nu.m_hat[~held])


def test_missing_arm_in_complement_raises():
    rng = np.random.default_rng(1)
    n = 30
    X = rng.normal(size=(n, 3))
    a = np.full(n, 1.0)
    a[0] = -1.0  # single control: excluded from one complement
    data = Dataset(X=X, y=rng.normal(size=n), a=a)
    with pytest.raises(InvalidInputError, match="smaller K"):
        crossfit_nuisance(data, 3, RIDGE, seed=0)


def test_crossfit_deterministic():
    data, _ = make_randomized_data(11, n=200)
    nu1 = crossfit_nuisance(data, 5, RIDGE, seed=3)
    nu2 = crossfit_nuisance(data, 5, RIDGE, seed=3)
    assert np.array_equal(nu1.pi_treat, nu2.pi_treat)
    assert np.array_equal(nu1.m_hat, nu2.m_hat)
    assert np.array_equal(nu1.mu_ref_hat, nu2.mu_ref_hat)
