"""The staged additive treatment-rule fit.

Stage 1 fits a sparse linear model of the treatment effect by inverse-
propensity-weighted lasso with the penalty level chosen by weighted
cross-validation. Stage 2 smooths the treatment-modulated residuals on each
covariate separately, producing one nonlinear feature per covariate.
Stage 3 refits on the combined linear + nonlinear design, charging each
nonlinear column a complexity-based penalty factor, and the final penalty
level is picked by the concordance criterion (or cross-validation).

The treatment-effect intercept lives inside the modulated design as an
unpenalized a/2 column at both stages, so constant effects are captured and
residuals subtract the full stage-1 fit.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DegenerateInputError,
    InvalidInputError,
    PipelineStageError,
)
from .lasso import (
    WeightedDesign,
    compute_lambda_max,
    cross_validate_lambda,
    default_path_ratio,
    fit_lasso_path,
    make_lambda_path,
)
from .learners import Learner
from .nuisance import crossfit_nuisance
from .selection import build_pseudo_outcomes, model_df, select_lambda_cic
from .spline import evaluate_spline, fit_weighted_smoothing_spline

SELECTION_MODES = ("cv", "cic_logn", "cic_2", "cic_logn_dr", "cic_2_dr")


@dataclass
class Dataset:
    """Covariates, outcome, and a treatment label in {-1, +1} per row."""

    X: np.ndarray
    y: np.ndarray
    a: np.ndarray
    column_names: list = None

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.float64)
        self.a = np.ascontiguousarray(self.a, dtype=np.float64)
        if self.X.ndim != 2:
            raise InvalidInputError("X must be a 2-d matrix")
        n, p = self.X.shape
        if n < 1:
            raise InvalidInputError("empty dataset")
        if self.y.shape != (n,) or self.a.shape != (n,):
            raise InvalidInputError("y and a must match the number of rows")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise InvalidInputError("non-finite values in X or y")
        if not np.all(np.isin(self.a, (-1.0, 1.0))):
            raise InvalidInputError("treatment labels must be -1 or +1")
        if np.all(self.a == 1.0) or np.all(self.a == -1.0):
            raise InvalidInputError("both treatment arms must be present")
        if self.column_names is None:
            self.column_names = [f"x{j + 1}" for j in range(p)]
        if len(self.column_names) != p:
            raise InvalidInputError("column_names must match the covariate count")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


@dataclass
class FitConfig:
    """Settings for one rule fit; defaults follow the package conventions."""

    seed: int = 0
    n_folds: int = 5
    eps_clip: float = 0.05
    selection: str = "cic_logn"
    propensity_learner: Learner = field(default_factory=Learner)
    outcome_learner: Learner = field(default_factory=Learner)
    n_lambda: int = 100
    lambda_min_ratio: float = None  # None = auto from problem shape

    def __post_init__(self):
        if self.selection not in SELECTION_MODES:
            raise InvalidInputError(
                f"selection must be one of {SELECTION_MODES}, got {self.selection!r}"
            )


@dataclass
class RuleModel:
    """A fitted treatment rule: score model, splines, and selection record."""

    kind: str  # "additive" or "linear"
    column_names: list
    beta_stage1: np.ndarray  # effect intercept followed by p coefficients
    splines: list  # per covariate, FittedSpline or None
    gamma: np.ndarray
    beta_lin: np.ndarray
    beta_non: np.ndarray
    final_intercept: float
    lambda2: float
    selection_trace: list  # per-lambda dict records
    standardization: dict
    config_echo: dict

    @property
    def p(self):
        return len(self.beta_lin)

    @property
    def n_nonlinear_terms(self):
        return int(np.count_nonzero(self.beta_non))


def compute_penalty_factors(fitted_sds, p):
    """min(sqrt(p), 1 + 1/s_j); absent or flat nonlinear terms get sqrt(p)."""
    if p < 1:
        raise InvalidInputError("p must be at least 1")
    fitted_sds = np.asarray(fitted_sds, dtype=np.float64)
    cap = np.sqrt(p)
    with np.errstate(divide="ignore"):
        raw = 1.0 + 1.0 / fitted_sds
    return np.where(fitted_sds > 0, np.minimum(cap, raw), cap)


def _interaction_design(data, columns, pi_observed):
    """Weighted design for an effect model: unpenalized a/2 column first."""
    half_a = 0.5 * data.a
    design = np.column_stack([half_a, half_a[:, None] * columns])
    pf = np.ones(design.shape[1])
    pf[0] = 0.0
    return design, pf, 1.0 / pi_observed


def _stage_path(design_matrix, response, weights, pf, config):
    d = WeightedDesign(
        design=design_matrix,
        response=response,
        weights=weights,
        penalty_factors=pf,
        intercept=False,
    )
    ratio = config.lambda_min_ratio
    if ratio is None:
        ratio = default_path_ratio(d.n, d.q)
    lambdas = make_lambda_path(compute_lambda_max(d), config.n_lambda, ratio)
    return d, fit_lasso_path(d, lambdas=lambdas)


@dataclass
class Stage1Result:
    beta1: np.ndarray  # [effect intercept, p coefficients]
    residuals: np.ndarray
    lambda1: float
    cv_errors: np.ndarray
    lambdas: np.ndarray


def fit_stage1(data: Dataset, nu, config: FitConfig):
    """Sparse linear effect model; returns coefficients and residuals.

    Design columns are (a/2) * [1, x]; the response is y minus the
    cross-fitted main effect; weights are inverse observed-arm propensities.
    The penalty is chosen by weighted K-fold cross-validation on the
    nuisance folds, and residuals subtract the full fitted effect term.
    """
    response = data.y - nu.m_hat
    design, pf, weights = _interaction_design(data, data.X, nu.pi_observed)
    d, path = _stage_path(design, response, weights, pf, config)
    cv = cross_validate_lambda(d, nu.fold_of, path.lambdas)
    fit = path.fits[cv.index]
    residuals = response - fit.predict(design)
    beta1 = fit.coefficients.copy()
    return Stage1Result(
        beta1=beta1,
        residuals=residuals,
        lambda1=cv.lambda_star,
        cv_errors=cv.mean_errors,
        lambdas=path.lambdas,
    )


@dataclass
class NonlinearFeatures:
    splines: list
    G: np.ndarray
    fitted_sds: np.ndarray


def build_nonlinear_features(data: Dataset, residuals, nu, min_distinct=4):
    """Per-covariate smooths of the treatment-modulated residuals.

    Fits a weighted smoothing spline of 2 * a_i * r_i on each covariate
    (weights inverse observed-arm propensities); the modulation makes the
    weighted conditional mean of the response equal the nonlinear part of
    the treatment effect. Covariates with fewer than ``min_distinct``
    distinct values get no spline and an all-zero feature column.
    """
    response = 2.0 * data.a * residuals
    weights = 1.0 / nu.pi_observed
    splines = []
    G = np.zeros((data.n, data.p))
    fitted_sds = np.zeros(data.p)
    for j in range(data.p):
        xj = data.X[:, j]
        try:
            s = fit_weighted_smoothing_spline(xj, response, weights)
        except DegenerateInputError:
            splines.append(None)
            continue
        splines.append(s)
        G[:, j] = evaluate_spline(s, xj)
        fitted_sds[j] = s.fitted_sd
    return NonlinearFeatures(splines=splines, G=G, fitted_sds=fitted_sds)


def fit_stage3(data: Dataset, nu, G, gamma, config: FitConfig):
    """Path of penalized fits on the combined [x, g(x)] effect design.

    Linear columns carry unit penalty factors, nonlinear columns carry
    gamma_j, and the leading a/2 intercept column is unpenalized.
    """
    response = data.y - nu.m_hat
    design, pf, weights = _interaction_design(
        data, np.hstack([data.X, G]), nu.pi_observed
    )
    pf[1 + data.p :] = gamma
    d, path = _stage_path(design, response, weights, pf, config)
    return d, path


def _split_coefficients(fit, p):
    return float(fit.coefficients[0]), fit.coefficients[1 : p + 1], fit.coefficients[p + 1 :]


def _rule_scores_per_lambda(path, base_columns, p):
    """(n, L) scores matrix: effect intercept + linear (+ nonlinear) parts."""
    coefs = np.column_stack([f.coefficients for f in path.fits])  # (q, L)
    ones = np.ones((base_columns.shape[0], 1))
    return np.hstack([ones, base_columns]) @ coefs


def _select_index(path, data, nu, scores, spline_dfs, config):
    mode = config.selection
    kappa_mode = "log_n" if mode.startswith("cic_logn") else "two"
    estimator = "dr" if mode.endswith("_dr") else "ipw"
    po = build_pseudo_outcomes(data.y, data.a, nu)
    sel = select_lambda_cic(
        path, po, scores, spline_dfs, kappa_mode=kappa_mode, estimator=estimator
    )
    trace = [
        {
            "lambda": ev.lam,
            "concordance": ev.concordance,
            "df": ev.df,
            "kappa": ev.kappa,
            "cic": ev.cic,
        }
        for ev in sel.trace
    ]
    return sel.index, trace


def _select_with_cv(design, nu, path, spline_dfs):
    cv = cross_validate_lambda(design, nu.fold_of, path.lambdas)
    trace = [
        {
            "lambda": float(lam),
            "cv_error": float(err),
            "df": model_df(fit, spline_dfs),
        }
        for lam, err, fit in zip(path.lambdas, cv.mean_errors, path.fits)
    ]
    return cv.index, trace


def _config_echo(config: FitConfig):
    return {
        "seed": config.seed,
        "n_folds": config.n_folds,
        "eps_clip": config.eps_clip,
        "selection": config.selection,
        "propensity_learner": config.propensity_learner.kind,
        "propensity_hyperparameters": dict(config.propensity_learner.hyperparameters),
        "outcome_learner": config.outcome_learner.kind,
        "outcome_hyperparameters": dict(config.outcome_learner.hyperparameters),
        "n_lambda": config.n_lambda,
        "lambda_min_ratio": config.lambda_min_ratio,
    }


def _stage(stage_name):
    """Decorator-free stage wrapper: re-raise with the stage tag."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineStageError):
                raise PipelineStageError(stage_name, str(exc)) from exc
            return False

    return _Ctx()


def _fit_nuisance(data, config):
    with _stage("nuisance"):
        return crossfit_nuisance(
            data,
            K=config.n_folds,
            learners={
                "propensity": config.propensity_learner,
                "outcome": config.outcome_learner,
            },
            eps_clip=config.eps_clip,
            seed=config.seed,
        )


def fit_rule(data: Dataset, config: FitConfig = None, nuisance=None):
    """Fit the full additive treatment rule.

    ``nuisance`` overrides the cross-fitted estimates (e.g. oracle values in
    simulations); it must carry a usable fold assignment for the internal
    cross-validation steps.
    """
    config = config or FitConfig()
    nu = nuisance if nuisance is not None else _fit_nuisance(data, config)
    with _stage("stage1"):
        s1 = fit_stage1(data, nu, config)
    with _stage("nonlinear_features"):
        feats = build_nonlinear_features(data, s1.residuals, nu)
    gamma = compute_penalty_factors(feats.fitted_sds, data.p)
    with _stage("stage3"):
        design, path = fit_stage3(data, nu, feats.G, gamma, config)
    with _stage("selection"):
        spline_dfs = np.array(
            [s.effective_df if s is not None else 0.0 for s in feats.splines]
        )
        if config.selection == "cv":
            index, trace = _select_with_cv(design, nu, path, spline_dfs)
        else:
            scores = _rule_scores_per_lambda(
                path, np.hstack([data.X, feats.G]), data.p
            )
            index, trace = _select_index(path, data, nu, scores, spline_dfs, config)
    fit = path.fits[index]
    b0, beta_lin, beta_non = _split_coefficients(fit, data.p)
    return RuleModel(
        kind="additive",
        column_names=list(data.column_names),
        beta_stage1=s1.beta1,
        splines=feats.splines,
        gamma=gamma,
        beta_lin=beta_lin.copy(),
        beta_non=beta_non.copy(),
        final_intercept=b0,
        lambda2=float(path.lambdas[index]),
        selection_trace=trace,
        standardization={"stage1_lambda": s1.lambda1},
        config_echo=_config_echo(config),
    )


def fit_linear_rule(data: Dataset, config: FitConfig = None, nuisance=None):
    """Fit the linear-only variant (no nonlinear augmentation)."""
    config = config or FitConfig()
    nu = nuisance if nuisance is not None else _fit_nuisance(data, config)
    response = data.y - nu.m_hat
    design_matrix, pf, weights = _interaction_design(data, data.X, nu.pi_observed)
    with _stage("stage1"):
        d, path = _stage_path(design_matrix, response, weights, pf, config)
    with _stage("selection"):
        spline_dfs = np.zeros(data.p)
        if config.selection == "cv":
            index, trace = _select_with_cv(d, nu, path, spline_dfs)
        else:
            scores = _rule_scores_per_lambda(path, data.X, data.p)
            index, trace = _select_index(path, data, nu, scores, spline_dfs, config)
    fit = path.fits[index]
    b0 = float(fit.coefficients[0])
    beta_lin = fit.coefficients[1:].copy()
    return RuleModel(
        kind="linear",
        column_names=list(data.column_names),
        beta_stage1=fit.coefficients.copy(),
        splines=[None] * data.p,
        gamma=np.full(data.p, np.sqrt(data.p)),
        beta_lin=beta_lin,
        beta_non=np.zeros(data.p),
        final_intercept=b0,
        lambda2=float(path.lambdas[index]),
        selection_trace=trace,
        standardization={},
        config_echo=_config_echo(config),
    )


def predict_cate(model: RuleModel, X_new):
    """Estimated conditional treatment effect at new covariate rows."""
    X_new = np.asarray(X_new, dtype=np.float64)
    if X_new.ndim != 2 or X_new.shape[1] != model.p:
        raise InvalidInputError(
            f"expected {model.p} covariate columns, got shape {X_new.shape}"
        )
    out = model.final_intercept + X_new @ model.beta_lin
    for j in range(model.p):
        if model.beta_non[j] != 0.0 and model.splines[j] is not None:
            out = out + model.beta_non[j] * evaluate_spline(
                model.splines[j], X_new[:, j]
            )
    return out


def predict_rule(model: RuleModel, X_new):
    """Treatment labels: sign of the estimated effect, zero mapping to +1."""
    return np.where(predict_cate(model, X_new) >= 0.0, 1.0, -1.0)
