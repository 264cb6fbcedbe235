#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the two hot paths on representative problem sizes: the full
coordinate-descent lasso path and one spline roughness search. Both
backends are imported directly, so no reinstall or env var is needed.

Run: python3 benchmarks/backend_bench.py
"""

import time

import numpy as np

from additr import _kernels_py

try:
    from additr import _kernels

    BACKENDS = [("compiled", _kernels), ("pure-python", _kernels_py)]
except ImportError:
    print("compiled extension not built; timing the fallback only")
    BACKENDS = [("pure-python", _kernels_py)]


def time_call(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def lasso_path_workload(kernels, n=1000, q=200, n_lambda=100):
    rng = np.random.default_rng(0)
    X = rng.uniform(-2, 2, size=(n, q))
    beta_true = np.zeros(q)
    beta_true[:8] = rng.normal(size=8)
    y = X @ beta_true + rng.standard_normal(n)
    w = rng.uniform(0.5, 2.0, size=n)
    w = w / w.sum()
    mean = w @ X
    Xc = X - mean
    scale = np.sqrt(w @ (Xc * Xc))
    Z = np.asfortranarray(Xc / scale)
    WZ = np.asfortranarray(w[:, None] * Z)
    colnorm = np.einsum("ij,ij->j", WZ, Z)
    y0 = y - w @ y
    lmax = np.max(np.abs(WZ.T @ y0))
    lambdas = np.geomspace(lmax * (1 + 1e-10), 1e-3 * lmax, n_lambda)
    pf = np.ones(q)

    def run():
        beta = np.zeros(q)
        r = y0.copy()
        total_sweeps = 0
        for lam in lambdas:
            sweeps, _, ok = kernels.lasso_cd_sweeps(
                Z, WZ, r, beta, colnorm, lam * pf, 1e-7, 10_000
            )
            assert ok
            total_sweeps += sweeps
        return total_sweeps

    return run


def spline_workload(kernels, m=1000, n_mu=40):
    rng = np.random.default_rng(1)
    t = np.sort(rng.uniform(-2, 2, size=m))
    t = np.unique(t)
    m = len(t)
    w = rng.uniform(0.5, 2.0, size=m)
    y = np.sin(2 * t) + 0.2 * rng.standard_normal(m)
    h = np.diff(t)
    r0 = (h[:-1] + h[1:]) / 3.0
    r1 = h[1:-1] / 6.0
    qa, qc = 1.0 / h[:-1], 1.0 / h[1:]
    qb = -(qa + qc)
    iw = 1.0 / w
    b0 = qa * qa * iw[:-2] + qb * qb * iw[1:-1] + qc * qc * iw[2:]
    b1 = qb[:-1] * qa[1:] * iw[1:-2] + qc[:-1] * qb[1:] * iw[2:-1]
    b2 = qc[:-2] * qa[2:] * iw[2:-2]
    rhs = (y[2:] - y[1:-1]) / h[1:] - (y[1:-1] - y[:-2]) / h[:-1]
    mus = np.geomspace(1e-6, 1e2, n_mu)

    def run():
        acc = 0.0
        for mu in mus:
            a0 = r0 + mu * b0
            s = 1.0 / np.sqrt(a0)
            factors = kernels.band_ldl(
                np.ones_like(a0), (r1 + mu * b1) * s[:-1] * s[1:],
                mu * b2 * s[:-2] * s[2:],
            )
            gamma = s * kernels.band_solve(*factors, s * rhs)
            d0, d1, _ = kernels.band_inv_band(*factors)
            acc += float((d0 * s * s) @ r0) + float(gamma[0])
        return acc

    return run


def main():
    print(f"{'workload':<28}" + "".join(f"{name:>16}" for name, _ in BACKENDS))
    for label, make in (
        ("lasso path n=1000 q=200", lasso_path_workload),
        ("spline search m=1000", spline_workload),
    ):
        times = []
        for _, kernels in BACKENDS:
            times.append(time_call(make(kernels)))
        cells = "".join(f"{t * 1e3:>13.1f} ms" for t in times)
        print(f"{label:<28}{cells}")
        if len(times) == 2:
            print(f"{'':<28}{'':>16}{times[1] / times[0]:>13.1f} x")


if __name__ == "__main__":
    main()
