"""Pure-Python implementations of the numeric hot kernels.

Mirrors the call signatures and semantics of the compiled module
``additr._kernels``. Used when the extension is not built or when
``ADDITR_PURE_PYTHON=1`` is set. The coordinate-descent kernel keeps the
per-coordinate work in vectorized numpy calls; the banded-matrix kernels run
plain Python loops on list copies (the recursions are inherently sequential).
"""

import numpy as np


def lasso_cd_sweeps(Z, WZ, r, beta, colnorm, thr, tol, max_sweeps):
    """Cyclic coordinate descent on a standardized design, in place.

    Z : (n, q) design, Fortran order.
    WZ : (n, q) normalized-weight-times-design, Fortran order.
    r : residual vector ``y - Z @ beta``; updated in place.
    beta : coefficient vector on the standardized scale; updated in place.
    colnorm : per-column ``sum_i WZ[i, j] * Z[i, j]``.
    thr : per-column soft threshold (lambda times penalty factor).
    tol : convergence tolerance on the max absolute coefficient change
        over a full sweep.
    max_sweeps : cap on the total number of sweeps (full or active-set).

    Returns (sweeps_used, last_full_sweep_delta, converged). After the first
    full sweep, iteration cycles over the current nonzero set until it is
    stable, then re-checks all coordinates with a full sweep.
    """
    q = beta.shape[0]
    sweeps = 0
    full = True
    active = np.arange(q)
    last_full_delta = np.inf
    while sweeps < max_sweeps:
        sweeps += 1
        cols = np.arange(q) if full else active
        maxd = 0.0
        for j in cols:
            cn = colnorm[j]
            if cn <= 0.0:
                continue
            bj = beta[j]
            rho = WZ[:, j] @ r + cn * bj
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
                r -= d * Z[:, j]
                ad = abs(d)
                if ad > maxd:
                    maxd = ad
        if full:
            last_full_delta = maxd
            if maxd < tol:
                return sweeps, maxd, True
            active = np.nonzero(beta)[0]
            full = False
        elif maxd < tol:
            full = True
    return sweeps, last_full_delta, False


def band_ldl(d0, d1, d2):
    """LDL^T factorization of a symmetric positive-definite pentadiagonal matrix.

    d0, d1, d2 : main diagonal (m), first and second subdiagonals (m-1, m-2).

    Returns (D, l1, l2) with L unit lower triangular, L[i+1, i] = l1[i] and
    L[i+2, i] = l2[i]. Raises ``np.linalg.LinAlgError`` on a non-positive
    pivot.
    """
    m = len(d0)
    D = list(map(float, d0))
    l1 = list(map(float, d1))
    l2 = list(map(float, d2))
    for i in range(m):
        di = D[i]
        if i >= 1:
            di -= l1[i - 1] * l1[i - 1] * D[i - 1]
        if i >= 2:
            di -= l2[i - 2] * l2[i - 2] * D[i - 2]
        if di <= 0.0:
            raise np.linalg.LinAlgError(f"non-positive pivot at row {i}")
        D[i] = di
        if i + 1 < m:
            t = l1[i]
            if i >= 1:
                t -= l1[i - 1] * l2[i - 1] * D[i - 1]
            l1[i] = t / di
        if i + 2 < m:
            l2[i] = l2[i] / di
    return (
        np.asarray(D, dtype=np.float64),
        np.asarray(l1, dtype=np.float64),
        np.asarray(l2, dtype=np.float64),
    )


def band_solve(D, l1, l2, b):
    """Solve A x = b given the pentadiagonal LDL^T factors of A."""
    m = len(D)
    z = list(map(float, b))
    for i in range(m):
        if i >= 1:
            z[i] -= l1[i - 1] * z[i - 1]
        if i >= 2:
            z[i] -= l2[i - 2] * z[i - 2]
    for i in range(m):
        z[i] /= D[i]
    for i in range(m - 1, -1, -1):
        if i + 1 < m:
            z[i] -= l1[i] * z[i + 1]
        if i + 2 < m:
            z[i] -= l2[i] * z[i + 2]
    return np.asarray(z, dtype=np.float64)


def band_inv_band(D, l1, l2):
    """Central band of the inverse of a pentadiagonal LDL^T-factored matrix.

    Backward recursion over the factors; only entries within the original
    bandwidth are produced, which is all a trace against a banded matrix
    needs. Returns (b0, b1, b2): diagonal, first and second superdiagonals
    of the inverse.
    """
    m = len(D)
    b0 = [0.0] * m
    b1 = [0.0] * max(m - 1, 0)
    b2 = [0.0] * max(m - 2, 0)
    Dl = list(map(float, D))
    l1l = list(map(float, l1))
    l2l = list(map(float, l2))
    for i in range(m - 1, -1, -1):
        if i + 2 < m:
            b2[i] = -l1l[i] * b1[i + 1] - l2l[i] * b0[i + 2]
        if i + 1 < m:
            t = -l1l[i] * b0[i + 1]
            if i + 2 < m:
                t -= l2l[i] * b1[i + 1]
            b1[i] = t
        t = 1.0 / Dl[i]
        if i + 1 < m:
            t -= l1l[i] * b1[i]
        if i + 2 < m:
            t -= l2l[i] * b2[i]
        b0[i] = t
    return (
        np.asarray(b0, dtype=np.float64),
        np.asarray(b1, dtype=np.float64),
        np.asarray(b2, dtype=np.float64),
    )
