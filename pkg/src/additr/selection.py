"""Concordance information criterion for tuning-parameter selection.

The criterion is n * C - kappa * DF, maximized over the penalty path, where
C is a pairwise concordance estimator built from inverse-propensity pseudo-
outcomes (optionally the doubly-robust version) and DF charges one degree of
freedom per active linear term plus the fitted spline df per active
nonlinear term. Pairwise sums are computed in O(n log n) by sorting scores
and accumulating prefix sums over strictly-smaller score groups; tied scores
contribute nothing.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import InvalidInputError

KAPPA_MODES = ("log_n", "two", "zero")


@dataclass
class PseudoOutcomes:
    """Per-observation ingredients of the concordance estimators.

    w : inverse-propensity pseudo-outcome, used by the plain estimator.
    u, v : factors of the doubly-robust pairwise terms u_i v_j - u_j v_i.
    scores : candidate-rule scores f(x_i) whose ordering is being assessed.
    """

    w: np.ndarray
    u: np.ndarray
    v: np.ndarray
    scores: np.ndarray


@dataclass
class CicEvaluation:
    lam: float
    concordance: float
    df: float
    kappa: float
    cic: float


def build_pseudo_outcomes(y, a, nu, scores=None):
    """Assemble pseudo-outcomes from data and cross-fitted nuisance values.

    w_i = (y_i - mu_ref_i) * (0.5 a_i + 0.5 - pi_treat_i) / pi_observed_i and
    v_i = (0.5 a_i + 0.5) / pi_treat_i; the doubly-robust u equals w.
    """
    y = np.asarray(y, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    w = (y - nu.mu_ref_hat) * (0.5 * a + 0.5 - nu.pi_treat) / nu.pi_observed
    v = (0.5 * a + 0.5) / nu.pi_treat
    if scores is None:
        scores = np.zeros_like(w)
    return PseudoOutcomes(w=w, u=w, v=v, scores=np.asarray(scores, dtype=np.float64))


def fast_pairwise_sum(u, v, scores):
    """sum over i != j of (u_i v_j - u_j v_i) * 1{scores_i > scores_j}.

    O(n log n): with scores sorted ascending and ties grouped, each i
    contributes u_i * V_less(i) - v_i * U_less(i), where the *_less sums run
    over the strictly smaller score groups. Setting v = 1 yields the plain
    pairwise-difference sum.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    n = len(scores)
    if n == 0:
        return 0.0
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    us = u[order]
    vs = v[order]
    new_group = np.empty(n, dtype=bool)
    new_group[0] = True
    new_group[1:] = s[1:] != s[:-1]
    starts = np.nonzero(new_group)[0]
    counts = np.diff(np.append(starts, n))
    start_of = np.repeat(starts, counts)
    pref_u = np.concatenate([[0.0], np.cumsum(us)])
    pref_v = np.concatenate([[0.0], np.cumsum(vs)])
    u_less = pref_u[start_of]
    v_less = pref_v[start_of]
    return float(us @ v_less - vs @ u_less)


def concordance_ipw(po: PseudoOutcomes):
    """Plain pairwise concordance (1/(n(n-1))) sum (w_i - w_j) 1{f_i > f_j}."""
    n = len(po.scores)
    if n < 2:
        raise InvalidInputError("concordance needs at least two observations")
    return fast_pairwise_sum(po.w, np.ones(n), po.scores) / (n * (n - 1))


def concordance_dr(po: PseudoOutcomes):
    """Doubly-robust pairwise concordance with u/v factorized terms."""
    n = len(po.scores)
    if n < 2:
        raise InvalidInputError("concordance needs at least two observations")
    return fast_pairwise_sum(po.u, po.v, po.scores) / (n * (n - 1))


def model_df(fit, spline_dfs):
    """Degrees of freedom of one path fit on the combined design.

    One per active linear term plus the spline df per active nonlinear term;
    the unpenalized intercept column is not counted. Works for linear-only
    fits (p + 1 columns) and combined fits (2p + 1 columns).
    """
    spline_dfs = np.asarray(spline_dfs, dtype=np.float64)
    p = len(spline_dfs)
    coef = fit.coefficients
    lin = coef[1 : p + 1]
    non = coef[p + 1 :]
    df = float(np.count_nonzero(lin))
    if non.size:
        if non.size != p:
            raise InvalidInputError("combined fit width does not match spline count")
        df += float(spline_dfs[non != 0.0].sum())
    return df


def cic_score(n, c, df, kappa_mode, lam=math.nan):
    """Assemble one criterion evaluation; kappa is ln(n), 2, or 0.

    The "zero" mode removes the complexity charge (diagnostic use only).
    """
    if n < 2:
        raise InvalidInputError("criterion needs n >= 2")
    if kappa_mode == "log_n":
        kappa = math.log(n)
    elif kappa_mode == "two":
        kappa = 2.0
    elif kappa_mode == "zero":
        kappa = 0.0
    else:
        raise InvalidInputError(f"unknown kappa mode {kappa_mode!r}")
    return CicEvaluation(
        lam=lam, concordance=c, df=df, kappa=kappa, cic=n * c - kappa * df
    )


@dataclass
class CicSelection:
    lambda_star: float
    index: int
    trace: list


def select_lambda_cic(
    path,
    po: PseudoOutcomes,
    scores_per_lambda,
    spline_dfs,
    kappa_mode="log_n",
    estimator="ipw",
):
    """Maximize the criterion over a fitted path.

    scores_per_lambda : (n, L) matrix of rule scores, one column per fit.
    Ties break toward the smaller df and then the larger lambda.
    """
    if estimator not in ("ipw", "dr"):
        raise InvalidInputError(f"unknown concordance estimator {estimator!r}")
    scores_per_lambda = np.asarray(scores_per_lambda, dtype=np.float64)
    L = len(path.fits)
    if L == 0:
        raise InvalidInputError("empty path")
    if scores_per_lambda.shape[1] != L:
        raise InvalidInputError("scores matrix does not match path length")
    n = scores_per_lambda.shape[0]
    conc = concordance_dr if estimator == "dr" else concordance_ipw
    trace = []
    best = None
    best_key = None
    for li in range(L):
        po_l = replace(po, scores=scores_per_lambda[:, li])
        c = conc(po_l)
        df = model_df(path.fits[li], spline_dfs)
        ev = cic_score(n, c, df, kappa_mode, lam=float(path.lambdas[li]))
        trace.append(ev)
        key = (ev.cic, -ev.df)
        if best is None or key > best_key:
            best = li
            best_key = key
    return CicSelection(lambda_star=float(path.lambdas[best]), index=best, trace=trace)
