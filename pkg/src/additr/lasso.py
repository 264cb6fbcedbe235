"""Weighted lasso with per-coefficient penalty factors.

Solved by cyclic coordinate descent on an internally standardized design.
Observation weights are normalized to sum to one, so the objective is

    (1/2) sum_i w~_i (y_i - b0 - z_i' beta)^2 + lambda * sum_j pf_j |beta_j|

with columns scaled to unit weighted variance (weighted mean removed when an
intercept is requested). Coefficients are reported on the original scale.
Fits are invariant to rescaling all weights by a positive constant.
"""

from dataclasses import dataclass, field

import numpy as np

from .backend import lasso_cd_sweeps
from .exceptions import ConvergenceError, InvalidInputError

DEFAULT_TOL = 1e-7
DEFAULT_MAX_SWEEPS = 10_000
DEFAULT_N_LAMBDA = 100
LAMBDA_FLOOR = 1e-12
_SCALE_EPS = 1e-12


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0) for t >= 0."""
    if t < 0:
        raise InvalidInputError("threshold must be nonnegative")
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@dataclass
class WeightedDesign:
    """A weighted penalized regression problem.

    design : (n, q) matrix.
    response : (n,) vector.
    weights : (n,) nonnegative observation weights with positive sum.
    penalty_factors : (q,) nonnegative per-column multipliers on the l1
        penalty; a factor of zero leaves the column unpenalized.
    intercept : fit an unpenalized intercept (default True).
    """

    design: np.ndarray
    response: np.ndarray
    weights: np.ndarray
    penalty_factors: np.ndarray
    intercept: bool = True

    def __post_init__(self):
        self.design = np.ascontiguousarray(self.design, dtype=np.float64)
        self.response = np.ascontiguousarray(self.response, dtype=np.float64)
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        self.penalty_factors = np.ascontiguousarray(
            self.penalty_factors, dtype=np.float64
        )
        if self.design.ndim != 2:
            raise InvalidInputError("design must be a 2-d matrix")
        n, q = self.design.shape
        if n < 1 or q < 1:
            raise InvalidInputError("design must have at least one row and column")
        if self.response.shape != (n,):
            raise InvalidInputError("response length does not match design rows")
        if self.weights.shape != (n,):
            raise InvalidInputError("weights length does not match design rows")
        if self.penalty_factors.shape != (q,):
            raise InvalidInputError("penalty_factors length does not match columns")
        for name, arr in (
            ("design", self.design),
            ("response", self.response),
            ("weights", self.weights),
            ("penalty_factors", self.penalty_factors),
        ):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"non-finite values in {name}")
        if np.any(self.weights < 0):
            raise InvalidInputError("weights must be nonnegative")
        if self.weights.sum() <= 0:
            raise InvalidInputError("weights must have positive sum")
        if np.any(self.penalty_factors < 0):
            raise InvalidInputError("penalty factors must be nonnegative")

    @property
    def n(self):
        return self.design.shape[0]

    @property
    def q(self):
        return self.design.shape[1]


@dataclass
class LassoFit:
    """Solution of the weighted lasso at one penalty level.

    Coefficients are on the original design scale; ``objective_value`` is on
    the solver's normalized-weight standardized scale.
    """

    intercept: float
    coefficients: np.ndarray
    lam: float
    objective_value: float
    nonzero_count: int
    n_sweeps: int = 0
    converged: bool = True

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        return self.intercept + X @ self.coefficients


@dataclass
class LassoPath:
    """Fits along a strictly decreasing lambda grid."""

    lambdas: np.ndarray
    fits: list = field(default_factory=list)

    def __len__(self):
        return len(self.lambdas)


class _Standardized:
    """Solver workspace: normalized weights, centered/scaled columns.

    Columns with (near-)zero weighted variance are dropped; their
    coefficients are fixed at zero. Without an intercept, columns are scaled
    by their weighted root mean square and not centered.
    """

    def __init__(self, d: WeightedDesign):
        self.d = d
        w = d.weights / d.weights.sum()
        self.w = w
        X = d.design
        if d.intercept:
            means = w @ X
        else:
            means = np.zeros(d.q)
        centered = X - means
        scales = np.sqrt(w @ (centered * centered))
        ref = scales.max() if scales.size else 0.0
        keep = scales > max(ref, 1.0) * _SCALE_EPS
        self.means = means
        self.scales = scales
        self.keep = keep
        kept = np.nonzero(keep)[0]
        self.kept = kept
        Z = np.asfortranarray(centered[:, kept] / scales[kept])
        self.Z = Z
        self.WZ = np.asfortranarray(w[:, None] * Z)
        self.colnorm = np.einsum("ij,ij->j", self.WZ, Z)
        self.pf = d.penalty_factors[kept].copy()
        self.ybar = float(w @ d.response) if d.intercept else 0.0
        self.y0 = d.response - self.ybar

    def beta_std_from_original(self, coefficients):
        return coefficients[self.kept] * self.scales[self.kept]

    def to_original(self, beta_std):
        coef = np.zeros(self.d.q)
        coef[self.kept] = beta_std / self.scales[self.kept]
        if self.d.intercept:
            b0 = self.ybar - float(self.means[self.kept] @ coef[self.kept])
        else:
            b0 = 0.0
        return b0, coef

    def objective(self, beta_std, r, lam):
        sse = float(self.w @ (r * r))
        return 0.5 * sse + lam * float(self.pf @ np.abs(beta_std))

    def unpenalized_residual(self):
        """Residual of y after fitting only the unpenalized kept columns."""
        free = self.pf == 0.0
        r0 = self.y0.copy()
        if np.any(free):
            Zf = self.Z[:, free]
            Wf = self.WZ[:, free]
            gram = Wf.T @ Zf
            rhs = Wf.T @ self.y0
            coef, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
            r0 -= Zf @ coef
        return r0

    @property
    def gradient_scale(self):
        if not hasattr(self, "_gradient_scale"):
            g0 = np.abs(self.WZ.T @ self.y0)
            pen = self.pf > 0
            if np.any(pen):
                self._gradient_scale = float(np.max(g0[pen] / self.pf[pen]))
            else:
                self._gradient_scale = float(g0.max()) if g0.size else 0.0
        return max(self._gradient_scale, LAMBDA_FLOOR)

    def kkt_violation(self, beta_std, r, lam):
        """Max stationarity violation of an iterate, standardized scale."""
        grad = self.WZ.T @ r
        thr = lam * self.pf
        active = beta_std != 0.0
        viol_active = np.abs(grad[active] - thr[active] * np.sign(beta_std[active]))
        viol_zero = np.abs(grad[~active]) - thr[~active]
        worst = 0.0
        if viol_active.size:
            worst = float(viol_active.max())
        if viol_zero.size:
            worst = max(worst, float(viol_zero.max()))
        return worst


# certificate threshold relative to the zero-coefficient gradient scale;
# half the 1e-4 stationarity tolerance returned fits must satisfy
_KKT_ACCEPT = 5e-5
_SWEEP_CHUNK = 1000


def _cd_solve(std, lam, beta_std, tol, max_sweeps):
    """Run coordinate descent from ``beta_std`` in place.

    Converged when the max coefficient change over a full sweep drops below
    ``tol``, or when the KKT residual certifies optimality; the latter ends
    the slow tail crawl on near-collinear designs where the coefficient
    slide is confined to a direction the objective is flat in.
    """
    r = std.y0 - std.Z @ beta_std
    thr = lam * std.pf
    total = 0
    delta = np.inf
    while total < max_sweeps:
        budget = min(_SWEEP_CHUNK, max_sweeps - total)
        sweeps, delta, ok = lasso_cd_sweeps(
            std.Z, std.WZ, r, beta_std, std.colnorm, thr, tol, budget
        )
        total += sweeps
        if ok:
            return r, total, delta, True
        if std.kkt_violation(beta_std, r, lam) <= _KKT_ACCEPT * std.gradient_scale:
            return r, total, delta, True
    return r, total, delta, False


def _make_fit(std, lam, beta_std, r, sweeps, ok):
    b0, coef = std.to_original(beta_std)
    return LassoFit(
        intercept=b0,
        coefficients=coef,
        lam=float(lam),
        objective_value=std.objective(beta_std, r, lam),
        nonzero_count=int(np.count_nonzero(coef)),
        n_sweeps=int(sweeps),
        converged=bool(ok),
    )


def fit_weighted_lasso(
    d: WeightedDesign,
    lam,
    warm_start: LassoFit | None = None,
    tol=DEFAULT_TOL,
    max_sweeps=DEFAULT_MAX_SWEEPS,
):
    """Minimize the weighted lasso objective at a single penalty level.

    Raises ConvergenceError (carrying the last iterate) if the maximum
    coefficient change over a full sweep never drops below ``tol`` within
    ``max_sweeps`` sweeps.
    """
    if not np.isfinite(lam) or lam <= 0:
        raise InvalidInputError("lambda must be positive and finite")
    std = _Standardized(d)
    if warm_start is not None:
        beta_std = std.beta_std_from_original(warm_start.coefficients)
    else:
        beta_std = np.zeros(len(std.kept))
    r, sweeps, delta, ok = _cd_solve(std, lam, beta_std, tol, max_sweeps)
    fit = _make_fit(std, lam, beta_std, r, sweeps, ok)
    if not ok:
        raise ConvergenceError(
            f"coordinate descent did not converge in {max_sweeps} sweeps "
            f"(last full-sweep change {delta:.3e})",
            last_fit=fit,
        )
    return fit


def compute_lambda_max(d: WeightedDesign):
    """Smallest lambda at which every penalized coefficient is zero.

    Computed on the standardized scale with normalized weights as
    max over penalized j of |sum_i w~_i z_ij r0_i| / pf_j, where r0 is the
    response after removing the weighted mean (and any unpenalized columns).
    Inflated by one part in 1e10 so a fit at the returned value zeroes every
    penalized coefficient under floating-point arithmetic, and floored at
    1e-12 so a zero-correlation response still yields a usable grid anchor.
    """
    std = _Standardized(d)
    if std.pf.size == 0 or not np.any(std.pf > 0):
        raise InvalidInputError("no penalized columns: lambda_max is not finite")
    r0 = std.unpenalized_residual()
    corr = np.abs(std.WZ.T @ r0)
    pen = std.pf > 0
    lmax = float(np.max(corr[pen] / std.pf[pen])) * (1.0 + 1e-10)
    return max(lmax, LAMBDA_FLOOR)


def make_lambda_path(lambda_max, n_lambda, ratio):
    """Geometric grid from lambda_max down to ratio * lambda_max."""
    if n_lambda < 2:
        raise InvalidInputError("n_lambda must be at least 2")
    if not (0 < ratio < 1):
        raise InvalidInputError("ratio must lie in (0, 1)")
    return np.geomspace(lambda_max, ratio * lambda_max, n_lambda)


def default_path_ratio(n, q):
    return 1e-3 if n > q else 1e-2


def fit_lasso_path(
    d: WeightedDesign,
    lambdas=None,
    n_lambda=DEFAULT_N_LAMBDA,
    ratio=None,
    tol=DEFAULT_TOL,
    max_sweeps=DEFAULT_MAX_SWEEPS,
):
    """Fit the full lambda path with warm starts (largest lambda first)."""
    std = _Standardized(d)
    if lambdas is None:
        if ratio is None:
            ratio = default_path_ratio(d.n, d.q)
        lambdas = make_lambda_path(compute_lambda_max(d), n_lambda, ratio)
    else:
        lambdas = np.asarray(lambdas, dtype=np.float64)
        if lambdas.ndim != 1 or len(lambdas) == 0:
            raise InvalidInputError("lambdas must be a nonempty 1-d array")
        if len(lambdas) > 1 and np.any(np.diff(lambdas) >= 0):
            raise InvalidInputError("lambdas must be strictly decreasing")
        if np.any(lambdas <= 0):
            raise InvalidInputError("lambdas must be positive")
    beta_std = np.zeros(len(std.kept))
    fits = []
    for lam in lambdas:
        r, sweeps, delta, ok = _cd_solve(std, lam, beta_std, tol, max_sweeps)
        fit = _make_fit(std, lam, beta_std, r, sweeps, ok)
        if not ok:
            raise ConvergenceError(
                f"path fit at lambda={lam:.4e} did not converge", last_fit=fit
            )
        fits.append(fit)
    return LassoPath(lambdas=np.asarray(lambdas, dtype=np.float64), fits=fits)


@dataclass
class CvResult:
    lambda_star: float
    index: int
    mean_errors: np.ndarray
    fold_errors: np.ndarray


def cross_validate_lambda(
    d: WeightedDesign,
    fold_of,
    lambdas,
    tol=DEFAULT_TOL,
    max_sweeps=DEFAULT_MAX_SWEEPS,
):
    """Weighted K-fold cross-validation over a lambda grid.

    For each fold, refits the path on the complement and scores the held-out
    weighted mean squared error sum_i w_i (y_i - yhat_i)^2 / sum_i w_i.
    Returns the lambda minimizing the across-fold mean, ties broken toward
    the larger lambda.
    """
    fold_of = np.asarray(getattr(fold_of, "fold_of", fold_of))
    if fold_of.shape != (d.n,):
        raise InvalidInputError("fold assignment length does not match data")
    lambdas = np.asarray(lambdas, dtype=np.float64)
    folds = np.unique(fold_of)
    if folds.size < 2:
        raise InvalidInputError("need at least two folds")
    fold_errors = np.empty((folds.size, lambdas.size))
    for fi, k in enumerate(folds):
        held = fold_of == k
        train = ~held
        wsum = d.weights[held].sum()
        if wsum <= 0:
            raise InvalidInputError(f"fold {k} has zero total weight")
        sub = WeightedDesign(
            design=d.design[train],
            response=d.response[train],
            weights=d.weights[train],
            penalty_factors=d.penalty_factors,
            intercept=d.intercept,
        )
        path = fit_lasso_path(sub, lambdas=lambdas, tol=tol, max_sweeps=max_sweeps)
        Xh = d.design[held]
        yh = d.response[held]
        wh = d.weights[held]
        for li, fit in enumerate(path.fits):
            resid = yh - fit.predict(Xh)
            fold_errors[fi, li] = float(wh @ (resid * resid)) / wsum
    mean_errors = fold_errors.mean(axis=0)
    index = int(np.argmin(mean_errors))  # first minimum = largest lambda
    return CvResult(
        lambda_star=float(lambdas[index]),
        index=index,
        mean_errors=mean_errors,
        fold_errors=fold_errors,
    )
