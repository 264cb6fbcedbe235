import numpy as np
import pytest

from additr.lasso import WeightedDesign


def random_design(seed, n_range=(20, 120), q_range=(2, 15), intercept=True,
                  pf_kind="mixed"):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(*n_range))
    q = int(rng.integers(*q_range))
    X = rng.normal(size=(n, q)) * rng.uniform(0.5, 3.0, size=q)
    beta = np.zeros(q)
    k = max(1, q // 3)
    beta[rng.choice(q, size=k, replace=False)] = rng.normal(size=k) * 2
    y = X @ beta + rng.standard_normal(n)
    w = rng.uniform(0.2, 3.0, size=n)
    if pf_kind == "ones":
        pf = np.ones(q)
    else:
        pf = rng.uniform(0.5, 2.0, size=q)
    return WeightedDesign(X, y, w, pf, intercept=intercept)


def standardized_parts(d):
    """Independent re-derivation of the solver's standardized quantities."""
    w = d.weights / d.weights.sum()
    if d.intercept:
        means = w @ d.design
    else:
        means = np.zeros(d.q)
    centered = d.design - means
    scales = np.sqrt(w @ (centered * centered))
    return w, means, scales


def kkt_violation(d, fit, lam, lambda_max):
    """Max KKT violation of a fit, measured on the standardized scale."""
    w, means, scales = standardized_parts(d)
    keep = scales > 0
    r = d.response - fit.intercept - d.design @ fit.coefficients
    tol = 1e-4 * lambda_max
    worst = 0.0
    for j in np.nonzero(keep)[0]:
        zj = (d.design[:, j] - means[j]) / scales[j]
        grad = float((w * zj) @ r)
        bj = fit.coefficients[j] * scales[j]
        t = lam * d.penalty_factors[j]
        if bj != 0.0:
            worst = max(worst, abs(grad - t * np.sign(bj)) - tol)
        else:
            worst = max(worst, abs(grad) - t - tol)
    return worst


def brute_pairwise_sum(u, v, s):
    total = 0.0
    n = len(s)
    for i in range(n):
        for j in range(n):
            if i != j and s[i] > s[j]:
                total += u[i] * v[j] - u[j] * v[i]
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
