"""Synthetic scenario generators, oracle metrics, and benchmark protocols.

Covariates are iid Uniform(-2, 2); treatment follows a logistic propensity
in the first three covariates; the outcome is Gaussian with standard
deviation 2 around main effect plus half-treatment-times-effect. Four
effect families of increasing complexity are provided, each scaled against
a shared quadratic main effect whose magnitude c controls the relative
signal. Oracle handles allow exact value/agreement evaluation on fresh
test draws, plus the diagnostics: interaction signal strength, covariate
balance, MAD-based column filtering, and a paired-outcome benchmark that
hides one arm per unit at training time.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError
from .nuisance import NuisanceEstimates, make_folds
from .pipeline import (
    Dataset,
    FitConfig,
    fit_linear_rule,
    fit_rule,
    predict_rule,
)

FAMILIES = ("linear", "highly_nonlinear", "tree", "polynomial")
FAMILY_EFFECT_SIZES = {
    # family -> (large-effect c, small-effect c); smaller c = stronger signal
    "linear": (0.1, 3.0),
    "highly_nonlinear": (1.0, 8.0),
    "tree": (1.0, 5.0),
    "polynomial": (0.1, 2.0),
}
NOISE_SD = 2.0
MIN_P = 8


@dataclass
class ScenarioSpec:
    family: str
    n: int
    p: int
    c: float
    seed: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}")
        if self.p < MIN_P:
            raise InvalidInputError(f"p must be at least {MIN_P}")
        if self.c <= 0:
            raise InvalidInputError("c must be positive")
        if self.n < 1:
            raise InvalidInputError("n must be positive")


@dataclass
class EvaluationReport:
    value: float
    agreement: float
    optimal_value: float
    always_treat_value: float


@dataclass
class ScenarioOracles:
    """Closures over the true data-generating quantities."""

    family: str
    c: float

    def main_effect(self, X):
        return true_main_effect(X, self.c)

    def delta(self, X):
        return true_delta(self.family, X)

    def propensity(self, X):
        return true_propensity(X)


def gen_covariates(n, p, seed):
    if n < 1 or p < 1:
        raise InvalidInputError("n and p must be positive")
    return np.random.default_rng(seed).uniform(-2.0, 2.0, size=(n, p))


def true_propensity(X):
    """P(A = 1 | x): logistic in x1 - x2 + 0.5 x3."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] < 3:
        raise InvalidInputError("propensity needs at least 3 covariates")
    eta = X[:, 0] - X[:, 1] + 0.5 * X[:, 2]
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ez = np.exp(eta[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def true_main_effect(X, c):
    """-c * sum_{j<=5} (x_j + (2/3)(2 x_j^2 - 1))."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] < 5:
        raise InvalidInputError("main effect needs at least 5 covariates")
    Z = X[:, :5]
    return -c * np.sum(Z + (2.0 / 3.0) * (2.0 * Z * Z - 1.0), axis=1)


def true_delta(family, X):
    """True treatment effect for one of the four scenario families."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] < MIN_P:
        raise InvalidInputError(f"effect formulas need at least {MIN_P} covariates")
    x = X.T
    if family == "linear":
        return x[0] - x[1] + 0.5 * x[2] + x[3] - x[4] - 0.5 * x[5]
    if family == "highly_nonlinear":
        return (
            x[0] ** 3
            + np.abs(x[2]) * np.exp(x[4])
            + 5.0 * np.sin(2.0 * np.pi * x[6])
            + 5.0 * np.cos(2.0 * np.pi * x[5])
            - (x[3] + x[7]) ** 2
            + 3.0 * np.abs(x[1] + x[4])
        )
    if family == "tree":
        return (
            3.0 * (x[0] + 0.5 > 0) * np.sign(x[1] - 0.5)
            + 2.5 * (x[0] + 0.5 < 0) * np.sign(x[3] - 0.5)
            + 0.5
        )
    if family == "polynomial":
        return 0.2 + x[0] ** 2 + x[1] ** 2 - x[2] ** 2 - x[3] ** 2
    raise InvalidInputError(f"unknown family {family!r}")


def gen_dataset(spec: ScenarioSpec):
    """Draw one dataset; returns (Dataset, ScenarioOracles)."""
    rng = np.random.default_rng(spec.seed)
    X = rng.uniform(-2.0, 2.0, size=(spec.n, spec.p))
    pi = true_propensity(X)
    a = np.where(rng.random(spec.n) < pi, 1.0, -1.0)
    oracles = ScenarioOracles(family=spec.family, c=spec.c)
    y = (
        oracles.main_effect(X)
        + 0.5 * a * oracles.delta(X)
        + NOISE_SD * rng.standard_normal(spec.n)
    )
    return Dataset(X=X, y=y, a=a), oracles


def assemble_dataset(X, main_effect, delta, propensity, seed, noise_sd=NOISE_SD):
    """Build a dataset from explicit truth arrays (custom-effect scenarios)."""
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    a = np.where(rng.random(n) < propensity, 1.0, -1.0)
    y = main_effect + 0.5 * a * delta + noise_sd * rng.standard_normal(n)
    return Dataset(X=X, y=y, a=a)


def oracle_nuisance(data: Dataset, oracles, eps_clip=0.05, n_folds=5, seed=0):
    """Nuisance estimates from the true generating functions.

    Keeps a genuine fold assignment so downstream cross-validation still
    works when the oracle values replace the cross-fitted ones.
    """
    pi = np.clip(oracles.propensity(data.X), eps_clip, 1.0 - eps_clip)
    m = oracles.main_effect(data.X)
    delta = oracles.delta(data.X)
    part = make_folds(data.n, n_folds, seed)
    return NuisanceEstimates(
        pi_treat=pi,
        pi_observed=np.where(data.a == 1.0, pi, 1.0 - pi),
        m_hat=m,
        mu_ref_hat=m - 0.5 * delta,
        fold_of=part.fold_of,
    )


def evaluate_rule(labels, m_values, delta_values):
    """Oracle value and agreement of predicted labels on a test set.

    value = mean(m + (d/2) * delta); the optimal rule is the sign of delta
    with zero mapping to +1, so optimal_value bounds every rule's value.
    """
    labels = np.asarray(labels, dtype=np.float64)
    m_values = np.asarray(m_values, dtype=np.float64)
    delta_values = np.asarray(delta_values, dtype=np.float64)
    if labels.size < 1:
        raise InvalidInputError("empty test set")
    d_star = np.where(delta_values >= 0.0, 1.0, -1.0)
    value = float(np.mean(m_values + 0.5 * labels * delta_values))
    agreement = float(np.mean(labels == d_star))
    optimal = float(np.mean(m_values + 0.5 * d_star * delta_values))
    always = float(np.mean(m_values + 0.5 * delta_values))
    return EvaluationReport(
        value=value,
        agreement=agreement,
        optimal_value=optimal,
        always_treat_value=always,
    )


def signal_strength(family, c, mc_n=200_000, seed=0):
    """Monte Carlo sqrt(Var(delta) / (Var(m) + noise variance))."""
    if mc_n < 10_000:
        raise InvalidInputError("mc_n must be at least 10000")
    X = gen_covariates(mc_n, MIN_P, seed)
    var_delta = float(np.var(true_delta(family, X)))
    var_m = float(np.var(true_main_effect(X, c)))
    return float(np.sqrt(var_delta / (var_m + NOISE_SD**2)))


def covariate_balance(data: Dataset, columns):
    """Absolute standardized mean differences and the treated proportion.

    SMD = |mean_1 - mean_-1| / sqrt((s_1^2 + s_-1^2) / 2) per column.
    """
    treated = data.a == 1.0
    if treated.sum() == 0 or (~treated).sum() == 0:
        raise InvalidInputError("both arms must be nonempty")
    smds = np.empty(len(columns))
    for i, j in enumerate(columns):
        x1 = data.X[treated, j]
        x0 = data.X[~treated, j]
        pooled = np.sqrt(0.5 * (x1.var(ddof=1) + x0.var(ddof=1)))
        smds[i] = abs(x1.mean() - x0.mean()) / pooled
    return smds, float(treated.mean())


def mad_filter(X, threshold):
    """Indices of columns whose median absolute deviation meets the threshold.

    MAD is median |x - median(x)| without a consistency constant.
    """
    X = np.asarray(X, dtype=np.float64)
    med = np.median(X, axis=0)
    mad = np.median(np.abs(X - med), axis=0)
    return np.nonzero(mad >= threshold)[0]


def _always_treat_method(train, seed):
    return lambda X_test: np.ones(X_test.shape[0])


def _model_method(kind, selection, base_config):
    def fit_and_wrap(train, seed):
        config = FitConfig(
            seed=int(seed),
            n_folds=base_config.n_folds,
            eps_clip=base_config.eps_clip,
            selection=selection,
            propensity_learner=base_config.propensity_learner,
            outcome_learner=base_config.outcome_learner,
            n_lambda=base_config.n_lambda,
            lambda_min_ratio=base_config.lambda_min_ratio,
        )
        fitter = fit_rule if kind == "additive" else fit_linear_rule
        model = fitter(train, config)
        return lambda X_test: predict_rule(model, X_test), model

    def method(train, seed):
        labeler, _ = fit_and_wrap(train, seed)
        return labeler

    method.fit_and_wrap = fit_and_wrap
    return method


def standard_methods(names, base_config=None):
    """Map method names like "additive_cic_logn" to fit callables.

    A method callable takes (train_dataset, seed) and returns a labeling
    function over test covariates.
    """
    base_config = base_config or FitConfig()
    out = {}
    for name in names:
        if name == "always_treat":
            out[name] = _always_treat_method
            continue
        kind, _, selection = name.partition("_")
        if kind not in ("linear", "additive"):
            raise InvalidInputError(f"unknown method {name!r}")
        out[name] = _model_method(kind, selection, base_config)
    return out


def run_scenarios(spec: ScenarioSpec, methods, n_reps, test_size=10_000):
    """Fit each method on fresh replicates and score on oracle test draws.

    Returns tidy rows: (replicate, method, metric, value). Alongside value
    and agreement, additive methods report their nonlinear term count.
    """
    rows = []
    streams = np.random.SeedSequence(spec.seed).spawn(n_reps)
    for rep, stream in enumerate(streams):
        train_seed, test_seed, *method_seeds = stream.generate_state(2 + len(methods))
        rep_spec = ScenarioSpec(
            family=spec.family, n=spec.n, p=spec.p, c=spec.c, seed=int(train_seed)
        )
        train, oracles = gen_dataset(rep_spec)
        X_test = gen_covariates(test_size, spec.p, int(test_seed))
        m_test = oracles.main_effect(X_test)
        d_test = oracles.delta(X_test)
        for (name, method), mseed in zip(methods.items(), method_seeds):
            if hasattr(method, "fit_and_wrap"):
                labeler, model = method.fit_and_wrap(train, mseed)
                rows.append((rep, name, "nonlinear_terms", model.n_nonlinear_terms))
            else:
                labeler = method(train, mseed)
            report = evaluate_rule(labeler(X_test), m_test, d_test)
            rows.append((rep, name, "value", report.value))
            rows.append((rep, name, "agreement", report.agreement))
            rows.append((rep, name, "optimal_value", report.optimal_value))
            rows.append((rep, name, "always_treat_value", report.always_treat_value))
    return rows


@dataclass
class PairedBenchmarkResult:
    per_replicate: list  # (replicate, method, metric, value) rows
    summary: dict  # method -> {metric: (mean, sd)}
    excluded_units: int


def paired_outcome_benchmark(
    X,
    y_pos,
    y_neg,
    methods,
    n_reps,
    train_fraction=2.0 / 3.0,
    seed=0,
):
    """Benchmark on units with both potential outcomes recorded.

    Per replicate: split units into train/test, reveal one uniformly chosen
    arm per training unit, fit each method on the revealed data, then score
    test agreement against the better arm and test value as the mean outcome
    of the arm each method picks. Units missing either outcome are dropped
    (count reported).
    """
    X = np.asarray(X, dtype=np.float64)
    y_pos = np.asarray(y_pos, dtype=np.float64)
    y_neg = np.asarray(y_neg, dtype=np.float64)
    ok = np.isfinite(y_pos) & np.isfinite(y_neg) & np.all(np.isfinite(X), axis=1)
    excluded = int(len(y_pos) - ok.sum())
    X, y_pos, y_neg = X[ok], y_pos[ok], y_neg[ok]
    n = len(y_pos)
    if n < 10:
        raise InvalidInputError("too few complete units for the benchmark")
    rows = []
    streams = np.random.SeedSequence(seed).spawn(n_reps)
    for rep, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        perm = rng.permutation(n)
        n_train = int(round(train_fraction * n))
        train_idx = perm[:n_train]
        test_idx = perm[n_train:]
        arm = np.where(rng.random(n_train) < 0.5, 1.0, -1.0)
        y_obs = np.where(arm == 1.0, y_pos[train_idx], y_neg[train_idx])
        train = Dataset(X=X[train_idx], y=y_obs, a=arm)
        best = np.where(y_pos[test_idx] >= y_neg[test_idx], 1.0, -1.0)
        mseed = stream.generate_state(len(methods) + 1)[1:]
        for (name, method), ms in zip(methods.items(), mseed):
            labels = method(train, int(ms))(X[test_idx])
            agreement = float(np.mean(labels == best))
            value = float(
                np.mean(np.where(labels == 1.0, y_pos[test_idx], y_neg[test_idx]))
            )
            rows.append((rep, name, "agreement", agreement))
            rows.append((rep, name, "value", value))
    summary = {}
    for name in methods:
        summary[name] = {}
        for metric in ("agreement", "value"):
            vals = np.array([r[3] for r in rows if r[1] == name and r[2] == metric])
            summary[name][metric] = (float(vals.mean()), float(vals.std(ddof=1)))
    return PairedBenchmarkResult(
        per_replicate=rows, summary=summary, excluded_units=excluded
    )
