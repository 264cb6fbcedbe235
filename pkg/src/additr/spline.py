"""Weighted univariate penalized cubic smoothing spline.

Minimizes sum_i w_i (r_i - g(x_i))^2 + mu * int g''(t)^2 dt over natural
cubic splines with knots at the unique x values, using the classical
second-difference (Reinsch) system solved with banded LDL^T factorizations.
The roughness level mu is picked by weighted generalized cross-validation
over a logarithmic grid whose endpoints are located by bisecting the
effective-degrees-of-freedom curve. Ties in x are collapsed to unique knots
with aggregated weights and weighted-mean responses.

``effective_df`` counts model complexity beyond a constant fit (trace of the
smoother on the mean-centered problem), so an essentially flat fit reports
about 1 and a straight-line fit about 1, topping out near the knot count as
mu -> 0.
"""

from dataclasses import dataclass

import numpy as np

from .backend import band_inv_band, band_ldl, band_solve
from .exceptions import DegenerateInputError, InvalidInputError

DF_CAP = 15.0
DF_FLOOR = 1.01
GRID_SIZE = 40
MIN_DISTINCT = 4


@dataclass
class FittedSpline:
    """A fitted natural cubic smoothing spline.

    knots : strictly increasing unique abscissae.
    values : fitted values at the knots.
    second_derivs : second derivatives at the knots (zero at both ends).
    smoothing_parameter : selected roughness penalty mu.
    effective_df : smoother degrees of freedom beyond a constant fit.
    domain : (min, max) of the training x; evaluation is linear outside.
    fitted_sd : weighted standard deviation of the in-sample fitted values.
    """

    knots: np.ndarray
    values: np.ndarray
    second_derivs: np.ndarray
    smoothing_parameter: float
    effective_df: float
    domain: tuple
    fitted_sd: float


class _SplineSystem:
    """Banded Reinsch system for one set of knots/weights.

    Holds the tridiagonal roughness matrix R and the pentadiagonal
    Q' W^-1 Q matrix, both in band storage, plus the second-difference
    right-hand side operator. Systems are Jacobi-scaled before
    factorization: knot gaps can span several orders of magnitude, and
    equilibrating the diagonal keeps the LDL^T pivots healthy.
    """

    def __init__(self, t, w):
        m = len(t)
        h = np.diff(t)
        if np.any(h <= 0):
            raise InvalidInputError("knots must be strictly increasing")
        self.t = t
        self.w = w
        self.h = h
        self.m = m
        # R: (m-2) x (m-2) tridiagonal
        self.r0 = (h[:-1] + h[1:]) / 3.0
        self.r1 = h[1:-1] / 6.0
        # Q columns j = 0..m-3 touch rows j, j+1, j+2
        qa = 1.0 / h[:-1]
        qc = 1.0 / h[1:]
        qb = -(qa + qc)
        self.qa, self.qb, self.qc = qa, qb, qc
        iw = 1.0 / w
        self.b0 = qa * qa * iw[:-2] + qb * qb * iw[1:-1] + qc * qc * iw[2:]
        self.b1 = qb[:-1] * qa[1:] * iw[1:-2] + qc[:-1] * qb[1:] * iw[2:-1]
        self.b2 = qc[:-2] * qa[2:] * iw[2:-2]

    def second_differences(self, y):
        return (y[2:] - y[1:-1]) / self.h[1:] - (y[1:-1] - y[:-2]) / self.h[:-1]

    def factor(self, mu):
        a0 = self.r0 + mu * self.b0
        a1 = self.r1 + mu * self.b1
        a2 = mu * self.b2
        s = 1.0 / np.sqrt(a0)
        factors = band_ldl(
            np.ones_like(a0), a1 * s[:-1] * s[1:], a2 * s[:-2] * s[2:]
        )
        return factors, s

    def solve(self, mu, y, factorization=None):
        """Fitted values and interior second derivatives at roughness mu."""
        if factorization is None:
            factorization = self.factor(mu)
        factors, s = factorization
        gamma = s * band_solve(*factors, s * self.second_differences(y))
        qg = np.zeros(self.m)
        qg[:-2] += self.qa * gamma
        qg[1:-1] += self.qb * gamma
        qg[2:] += self.qc * gamma
        g = y - mu * qg / self.w
        return g, gamma

    def df(self, mu, factorization=None):
        """Effective degrees of freedom beyond a constant fit: tr(S) - 1."""
        if factorization is None:
            factorization = self.factor(mu)
        factors, s = factorization
        b0, b1, _ = band_inv_band(*factors)
        tr = float((b0 * s * s) @ self.r0)
        if self.m > 3:
            tr += 2.0 * float((b1 * s[:-1] * s[1:]) @ self.r1)
        return 1.0 + tr


def _collapse_ties(x, r, w, rel_tol=1e-6):
    """Merge exact and near ties (within rel_tol of the range) into knots.

    Near-duplicate abscissae produce knot gaps that wreck the conditioning
    of the pentadiagonal system, so points closer than the tolerance share a
    knot placed at their weighted-mean position with aggregated weight and
    weighted-mean response.
    """
    xmin = float(x.min())
    span = float(x.max()) - xmin
    if span <= 0.0:
        return np.array([xmin]), np.array([0.0]), np.array([w.sum()]), np.zeros(
            len(x), dtype=np.intp
        )
    key = np.round((x - xmin) / (span * rel_tol)).astype(np.int64)
    _, inverse = np.unique(key, return_inverse=True)
    m = inverse.max() + 1
    wsum = np.bincount(inverse, weights=w, minlength=m)
    if np.any(wsum <= 0):
        raise InvalidInputError("every knot group needs positive total weight")
    t = np.bincount(inverse, weights=w * x, minlength=m) / wsum
    ybar = np.bincount(inverse, weights=w * r, minlength=m) / wsum
    return t, ybar, wsum, inverse


def _df_bracket(system, target, lo, hi):
    """Bisection for the mu with df(mu) == target; df is decreasing in mu."""
    for _ in range(60):
        mid = np.sqrt(lo * hi)
        if system.df(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-3:
            break
    return np.sqrt(lo * hi)


def _mu_grid(system, df_hi, df_lo, size):
    """Logarithmic mu grid spanning [df_lo, df_hi] effective df."""
    scale = (system.t[-1] - system.t[0]) ** 3 / max(system.m, 1)
    lo = scale * 1e-9
    hi = scale * 1e-9
    while system.df(lo) < df_hi and lo > scale * 1e-22:
        lo /= 64.0
    while system.df(hi) > df_lo and hi < scale * 1e22:
        hi *= 64.0
    mu_first = _df_bracket(system, df_hi, lo, hi)
    mu_last = _df_bracket(system, df_lo, lo, hi)
    if mu_last <= mu_first:
        mu_last = mu_first * 2.0
    return np.geomspace(mu_first, mu_last, size)


def fit_weighted_smoothing_spline(
    x,
    r,
    weights,
    grid_size=GRID_SIZE,
    df_cap=DF_CAP,
):
    """Fit the spline with GCV-selected roughness.

    Requires at least four distinct x values (raises DegenerateInputError
    otherwise, so callers can substitute an absent nonlinear term). The GCV
    search covers effective df from about 1 up to min(df_cap, distinct/2);
    exact ties in GCV resolve toward the smoother fit.
    """
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if x.shape != r.shape or x.shape != weights.shape or x.ndim != 1:
        raise InvalidInputError("x, r, weights must be 1-d and the same length")
    for name, arr in (("x", x), ("r", r), ("weights", weights)):
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError(f"non-finite values in {name}")
    if np.any(weights < 0) or weights.sum() <= 0:
        raise InvalidInputError("weights must be nonnegative with positive sum")
    t, ybar, wsum, inverse = _collapse_ties(x, r, weights)
    m = len(t)
    if m < MIN_DISTINCT:
        raise DegenerateInputError(
            f"need at least {MIN_DISTINCT} distinct x values, got {m}"
        )
    wn = wsum * (m / wsum.sum())  # scale-free weights, sum m
    system = _SplineSystem(t, wn)

    df_hi = min(df_cap, m / 2.0)
    grid = _mu_grid(system, df_hi, DF_FLOOR, grid_size)
    trials = []
    for mu in grid:
        factors = system.factor(mu)
        g, gamma = system.solve(mu, ybar, factors)
        df = system.df(mu, factors)
        resid = ybar - g
        rss = float(wn @ (resid * resid)) / m
        denom = 1.0 - (df + 1.0) / m
        trials.append((rss / (denom * denom), mu, g, gamma, df))
    gmin = min(t[0] for t in trials)
    # near-ties (e.g. data in the penalty null space, where every mu fits
    # exactly up to rounding) resolve toward the smoothest fit
    cutoff = gmin * (1.0 + 1e-7) + 1e-14 * float(wn @ (ybar * ybar)) / m
    _, mu_star, g, gamma, df = max(
        (t for t in trials if t[0] <= cutoff), key=lambda t: t[1]
    )

    second = np.zeros(m)
    second[1:-1] = gamma
    w_norm = weights / weights.sum()
    fitted = g[inverse]
    mean_f = float(w_norm @ fitted)
    fitted_sd = float(np.sqrt(w_norm @ ((fitted - mean_f) ** 2)))
    return FittedSpline(
        knots=t,
        values=g,
        second_derivs=second,
        smoothing_parameter=float(mu_star),
        effective_df=float(df),
        domain=(float(t[0]), float(t[-1])),
        fitted_sd=fitted_sd,
    )


def evaluate_spline(s: FittedSpline, x_new):
    """Evaluate a fitted spline, extrapolating linearly outside its domain."""
    x = np.asarray(x_new, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("non-finite evaluation points")
    t, g, M = s.knots, s.values, s.second_derivs
    m = len(t)
    idx = np.clip(np.searchsorted(t, x, side="right") - 1, 0, m - 2)
    h = t[idx + 1] - t[idx]
    a = (t[idx + 1] - x) / h
    b = (x - t[idx]) / h
    out = (
        a * g[idx]
        + b * g[idx + 1]
        + ((a**3 - a) * M[idx] + (b**3 - b) * M[idx + 1]) * h * h / 6.0
    )
    lo, hi = s.domain
    left = x < lo
    if np.any(left):
        h0 = t[1] - t[0]
        slope = (g[1] - g[0]) / h0 - h0 * M[1] / 6.0
        out = np.where(left, g[0] + slope * (x - t[0]), out)
    right = x > hi
    if np.any(right):
        h1 = t[-1] - t[-2]
        slope = (g[-1] - g[-2]) / h1 + h1 * M[-2] / 6.0
        out = np.where(right, g[-1] + slope * (x - t[-1]), out)
    return out
