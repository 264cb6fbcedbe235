# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numeric hot kernels: coordinate-descent sweeps for the weighted
lasso and pentadiagonal LDL^T routines for the smoothing-spline solver.

Semantics match additr._kernels_py exactly; that module is the readable
reference and the import-time fallback.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def lasso_cd_sweeps(double[::1, :] Z, double[::1, :] WZ, double[::1] r,
                    double[::1] beta, double[::1] colnorm, double[::1] thr,
                    double tol, int max_sweeps):
    """Cyclic coordinate descent on a standardized design, in place.

    See additr._kernels_py.lasso_cd_sweeps for the full contract.
    Returns (sweeps_used, last_full_sweep_delta, converged).
    """
    cdef Py_ssize_t n = Z.shape[0]
    cdef Py_ssize_t q = Z.shape[1]
    cdef Py_ssize_t i, j, k, n_active
    cdef double rho, bj, bnew, d, ad, maxd, t, cn
    cdef double last_full_delta = np.inf
    cdef int sweeps = 0
    cdef bint full = True
    cdef cnp.ndarray[cnp.intp_t, ndim=1] active = np.arange(q, dtype=np.intp)
    cdef Py_ssize_t[::1] act = active

    n_active = q
    while sweeps < max_sweeps:
        sweeps += 1
        maxd = 0.0
        if full:
            for j in range(q):
                cn = colnorm[j]
                if cn <= 0.0:
                    continue
                bj = beta[j]
                rho = cn * bj
                for i in range(n):
                    rho += WZ[i, j] * r[i]
                t = thr[j]
                if rho > t:
                    bnew = (rho - t) / cn
                elif rho < -t:
                    bnew = (rho + t) / cn
                else:
                    bnew = 0.0
                d = bnew - bj
                if d != 0.0:
                    beta[j] = bnew
                    for i in range(n):
                        r[i] -= d * Z[i, j]
                    ad = d if d > 0.0 else -d
                    if ad > maxd:
                        maxd = ad
        else:
            for k in range(n_active):
                j = act[k]
                cn = colnorm[j]
                if cn <= 0.0:
                    continue
                bj = beta[j]
                rho = cn * bj
                for i in range(n):
                    rho += WZ[i, j] * r[i]
                t = thr[j]
                if rho > t:
                    bnew = (rho - t) / cn
                elif rho < -t:
                    bnew = (rho + t) / cn
                else:
                    bnew = 0.0
                d = bnew - bj
                if d != 0.0:
                    beta[j] = bnew
                    for i in range(n):
                        r[i] -= d * Z[i, j]
                    ad = d if d > 0.0 else -d
                    if ad > maxd:
                        maxd = ad
        if full:
            last_full_delta = maxd
            if maxd < tol:
                return sweeps, maxd, True
            n_active = 0
            for j in range(q):
                if beta[j] != 0.0:
                    act[n_active] = j
                    n_active += 1
            full = False
        elif maxd < tol:
            full = True
    return sweeps, last_full_delta, False


def band_ldl(d0, d1, d2):
    """LDL^T factors of a symmetric positive-definite pentadiagonal matrix."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] D = np.array(d0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] l1 = np.array(d1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] l2 = np.array(d2, dtype=np.float64)
    cdef double[::1] Dv = D
    cdef double[::1] l1v = l1
    cdef double[::1] l2v = l2
    cdef Py_ssize_t m = Dv.shape[0]
    cdef Py_ssize_t i
    cdef double di, t
    for i in range(m):
        di = Dv[i]
        if i >= 1:
            di -= l1v[i - 1] * l1v[i - 1] * Dv[i - 1]
        if i >= 2:
            di -= l2v[i - 2] * l2v[i - 2] * Dv[i - 2]
        if di <= 0.0:
            raise np.linalg.LinAlgError(f"non-positive pivot at row {i}")
        Dv[i] = di
        if i + 1 < m:
            t = l1v[i]
            if i >= 1:
                t -= l1v[i - 1] * l2v[i - 1] * Dv[i - 1]
            l1v[i] = t / di
        if i + 2 < m:
            l2v[i] = l2v[i] / di
    return D, l1, l2


def band_solve(D, l1, l2, b):
    """Solve A x = b given the pentadiagonal LDL^T factors of A."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.array(b, dtype=np.float64)
    cdef double[::1] xv = x
    cdef const double[::1] Dv = np.ascontiguousarray(D, dtype=np.float64)
    cdef const double[::1] l1v = np.ascontiguousarray(l1, dtype=np.float64)
    cdef const double[::1] l2v = np.ascontiguousarray(l2, dtype=np.float64)
    cdef Py_ssize_t m = Dv.shape[0]
    cdef Py_ssize_t i
    for i in range(m):
        if i >= 1:
            xv[i] -= l1v[i - 1] * xv[i - 1]
        if i >= 2:
            xv[i] -= l2v[i - 2] * xv[i - 2]
    for i in range(m):
        xv[i] /= Dv[i]
    for i in range(m - 1, -1, -1):
        if i + 1 < m:
            xv[i] -= l1v[i] * xv[i + 1]
        if i + 2 < m:
            xv[i] -= l2v[i] * xv[i + 2]
    return x


def band_inv_band(D, l1, l2):
    """Central band of the inverse of a pentadiagonal LDL^T-factored matrix."""
    cdef const double[::1] Dv = np.ascontiguousarray(D, dtype=np.float64)
    cdef const double[::1] l1v = np.ascontiguousarray(l1, dtype=np.float64)
    cdef const double[::1] l2v = np.ascontiguousarray(l2, dtype=np.float64)
    cdef Py_ssize_t m = Dv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b0 = np.zeros(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b1 = np.zeros(max(m - 1, 0), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b2 = np.zeros(max(m - 2, 0), dtype=np.float64)
    cdef double[::1] b0v = b0
    cdef double[::1] b1v = b1
    cdef double[::1] b2v = b2
    cdef Py_ssize_t i
    cdef double t
    for i in range(m - 1, -1, -1):
        if i + 2 < m:
            b2v[i] = -l1v[i] * b1v[i + 1] - l2v[i] * b0v[i + 2]
        if i + 1 < m:
            t = -l1v[i] * b0v[i + 1]
            if i + 2 < m:
                t -= l2v[i] * b1v[i + 1]
            b1v[i] = t
        t = 1.0 / Dv[i]
        if i + 1 < m:
            t -= l1v[i] * b1v[i]
        if i + 2 < m:
            t -= l2v[i] * b2v[i]
        b0v[i] = t
    return b0, b1, b2
