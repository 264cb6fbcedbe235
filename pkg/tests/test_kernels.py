"""Backend equivalence: the compiled kernels and the pure-Python fallback
must produce matching results; both are checked against dense linear algebra.
"""

import numpy as np
import pytest

from additr import _kernels_py

try:
    from additr import _kernels

    BACKENDS = [_kernels, _kernels_py]
except ImportError:
    BACKENDS = [_kernels_py]

ids = ["compiled", "python"][: len(BACKENDS)]


def random_penta_spd(rng, m):
    """SPD pentadiagonal bands via a diagonally dominant construction."""
    d1 = rng.normal(size=m - 1) * 0.4
    d2 = rng.normal(size=m - 2) * 0.2
    d0 = rng.uniform(1.5, 3.0, size=m)
    return d0, d1, d2


def dense_from_bands(d0, d1, d2):
    m = len(d0)
    A = np.diag(d0)
    A += np.diag(d1, -1) + np.diag(d1, 1)
    A += np.diag(d2, -2) + np.diag(d2, 2)
    return A


@pytest.mark.parametrize("kernels", BACKENDS, ids=ids)
def test_band_ldl_solve_matches_dense(kernels):
    rng = np.random.default_rng(0)
    for m in (2, 3, 4, 5, 17, 120):
        d0, d1, d2 = random_penta_spd(rng, m)
        A = dense_from_bands(d0, d1, d2)
        b = rng.normal(size=m)
        D, l1, l2 = kernels.band_ldl(d0.copy(), d1.copy(), d2.copy())
        x = kernels.band_solve(D, l1, l2, b)
        assert x == pytest.approx(np.linalg.solve(A, b), rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("kernels", BACKENDS, ids=ids)
def test_band_inverse_band_matches_dense(kernels):
    rng = np.random.default_rng(1)
    for m in (2, 3, 4, 9, 60):
        d0, d1, d2 = random_penta_spd(rng, m)
        A = dense_from_bands(d0, d1, d2)
        Ainv = np.linalg.inv(A)
        D, l1, l2 = kernels.band_ldl(d0.copy(), d1.copy(), d2.copy())
        b0, b1, b2 = kernels.band_inv_band(D, l1, l2)
        assert b0 == pytest.approx(np.diag(Ainv), rel=1e-9, abs=1e-12)
        if m > 1:
            assert b1 == pytest.approx(np.diag(Ainv, 1), rel=1e-9, abs=1e-12)
        if m > 2:
            assert b2 == pytest.approx(np.diag(Ainv, 2), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("kernels", BACKENDS, ids=ids)
def test_band_ldl_rejects_indefinite(kernels):
    d0 = np.array([1.0, -2.0, 1.0])
    with pytest.raises(np.linalg.LinAlgError):
        kernels.band_ldl(d0, np.zeros(2), np.zeros(1))


def cd_problem(seed, n=80, q=12):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, q))
    y = X[:, 0] - 2 * X[:, 1] + rng.standard_normal(n)
    w = rng.uniform(0.2, 2.0, size=n)
    w = w / w.sum()
    mean = w @ X
    Xc = X - mean
    scale = np.sqrt(w @ (Xc * Xc))
    Z = np.asfortranarray(Xc / scale)
    WZ = np.asfortranarray(w[:, None] * Z)
    colnorm = np.einsum("ij,ij->j", WZ, Z)
    y0 = y - w @ y
    thr = 0.05 * np.max(np.abs(WZ.T @ y0)) * rng.uniform(0.5, 1.5, size=q)
    return Z, WZ, y0, colnorm, thr


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
def test_cd_backends_agree():
    for seed in range(8):
        Z, WZ, y0, colnorm, thr = cd_problem(seed)
        results = []
        for kernels in BACKENDS:
            beta = np.zeros(Z.shape[1])
            r = y0.copy()
            sweeps, delta, ok = kernels.lasso_cd_sweeps(
                Z, WZ, r, beta, colnorm, thr, 1e-9, 10_000
            )
            assert ok
            results.append((beta, r))
        assert results[0][0] == pytest.approx(results[1][0], abs=1e-12)
        assert results[0][1] == pytest.approx(results[1][1], abs=1e-12)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
def test_band_backends_agree():
    rng = np.random.default_rng(5)
    for m in (4, 30, 200):
        d0, d1, d2 = random_penta_spd(rng, m)
        b = rng.normal(size=m)
        outs = []
        for kernels in BACKENDS:
            D, l1, l2 = kernels.band_ldl(d0.copy(), d1.copy(), d2.copy())
            x = kernels.band_solve(D, l1, l2, b)
            bands = kernels.band_inv_band(D, l1, l2)
            outs.append((D, x, *bands))
        for a, bb in zip(outs[0], outs[1]):
            assert a == pytest.approx(bb, rel=1e-13, abs=1e-13)
