"""Pluggable prediction models for the nuisance fits.

Three kinds: a small hand-rolled gradient-boosted tree learner (default),
closed-form/IRLS ridge, and the package's own lasso with cross-validated
penalty. Binary tasks return probabilities; the boosted and ridge learners
use a logistic link, the lasso learner fits the 0/1 response directly and
clips. All learners are deterministic given a seed.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidInputError
from .lasso import WeightedDesign, cross_validate_lambda, fit_lasso_path

LEARNER_KINDS = ("boosted_stumps", "ridge", "lasso")
PROB_CLIP = 1e-6


@dataclass
class Learner:
    """A learner kind plus its hyperparameter overrides."""

    kind: str = "boosted_stumps"
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise InvalidInputError(
                f"unknown learner kind {self.kind!r}; expected one of {LEARNER_KINDS}"
            )


class ConstantModel:
    def __init__(self, value):
        self.value = float(value)

    def predict(self, X):
        return np.full(np.asarray(X).shape[0], self.value)


class LinearModel:
    def __init__(self, intercept, coefficients, logistic=False):
        self.intercept = float(intercept)
        self.coefficients = np.asarray(coefficients, dtype=np.float64)
        self.logistic = logistic

    def predict(self, X):
        eta = self.intercept + np.asarray(X, dtype=np.float64) @ self.coefficients
        if self.logistic:
            return _sigmoid(eta)
        return eta


def _sigmoid(eta):
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ez = np.exp(eta[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _standardize(X):
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (X - mean) / sd, mean, sd


def _fit_ridge(X, y, alpha):
    Z, mean, sd = _standardize(X)
    q = Z.shape[1]
    gram = Z.T @ Z / len(y) + alpha * np.eye(q)
    coef_std = np.linalg.solve(gram, Z.T @ (y - y.mean()) / len(y))
    coef = coef_std / sd
    b0 = y.mean() - mean @ coef
    return LinearModel(b0, coef)


def _fit_logistic_ridge(X, y, alpha, max_iter=50, tol=1e-9):
    """IRLS for l2-penalized logistic regression on standardized columns."""
    Z, mean, sd = _standardize(X)
    n, q = Z.shape
    b0 = 0.0
    coef = np.zeros(q)
    ybar = y.mean()
    if ybar <= 0.0 or ybar >= 1.0:
        return ConstantModel(np.clip(ybar, PROB_CLIP, 1 - PROB_CLIP))
    b0 = np.log(ybar / (1 - ybar))
    for _ in range(max_iter):
        eta = b0 + Z @ coef
        p = _sigmoid(eta)
        wirls = np.clip(p * (1 - p), 1e-6, None)
        z = eta + (y - p) / wirls
        wz = wirls[:, None] * Z
        gram = Z.T @ wz / n + alpha * np.eye(q)
        sw = wirls.sum() / n
        zx = Z.T @ (wirls * z) / n
        zbar = (wirls @ z) / wirls.sum()
        xbar = wz.sum(axis=0) / wirls.sum()
        # profile out the unpenalized intercept
        gram_c = gram - sw * np.outer(xbar, xbar)
        rhs = zx - sw * zbar * xbar
        new_coef = np.linalg.solve(gram_c, rhs)
        new_b0 = zbar - xbar @ new_coef
        delta = max(np.max(np.abs(new_coef - coef)), abs(new_b0 - b0))
        coef, b0 = new_coef, new_b0
        if delta < tol:
            break
    coef_orig = coef / sd
    return LinearModel(b0 - mean @ coef_orig, coef_orig, logistic=True)


class _TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, value):
        self.feature = -1
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.value = value


def _best_split(X, g, idx, min_leaf):
    """Best squared-error split of residuals g over rows idx; None if no gain."""
    best = None
    gsub = g[idx]
    total = gsub.sum()
    count = len(idx)
    base = total * total / count
    for j in range(X.shape[1]):
        xv = X[idx, j]
        order = np.argsort(xv, kind="stable")
        xs = xv[order]
        gs = gsub[order]
        csum = np.cumsum(gs)
        ks = np.arange(1, count)
        valid = xs[1:] != xs[:-1]
        ks = ks[valid]
        ks = ks[(ks >= min_leaf) & (count - ks >= min_leaf)]
        if ks.size == 0:
            continue
        left_sum = csum[ks - 1]
        score = left_sum**2 / ks + (total - left_sum) ** 2 / (count - ks) - base
        b = int(np.argmax(score))
        if score[b] > 1e-12 and (best is None or score[b] > best[0]):
            k = ks[b]
            best = (float(score[b]), j, 0.5 * (xs[k - 1] + xs[k]))
    return best


def _grow_tree(X, g, idx, depth, min_leaf):
    node = _TreeNode(g[idx].mean())
    if depth == 0 or len(idx) < 2 * min_leaf:
        return node
    split = _best_split(X, g, idx, min_leaf)
    if split is None:
        return node
    _, j, thr = split
    mask = X[idx, j] <= thr
    node.feature = j
    node.threshold = thr
    node.left = _grow_tree(X, g, idx[mask], depth - 1, min_leaf)
    node.right = _grow_tree(X, g, idx[~mask], depth - 1, min_leaf)
    return node


def _tree_predict(node, X, out, idx):
    if node.feature < 0:
        out[idx] = node.value
        return
    mask = X[idx, node.feature] <= node.threshold
    _tree_predict(node.left, X, out, idx[mask])
    _tree_predict(node.right, X, out, idx[~mask])


class BoostedTreesModel:
    """Gradient-boosted shallow regression trees.

    Squared loss for regression, logistic loss for binary targets. A fixed
    fraction of the training rows is held out to pick the stopping round.
    """

    def __init__(
        self,
        task,
        n_rounds=200,
        learning_rate=0.1,
        max_depth=2,
        min_leaf=5,
        holdout_fraction=0.2,
        patience=10,
    ):
        self.task = task
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.holdout_fraction = holdout_fraction
        self.patience = patience
        self.trees = []
        self.base = 0.0

    def fit(self, X, y, seed):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n = len(y)
        rng = np.random.default_rng(seed)
        perm = rng.permutation(n)
        n_val = max(1, int(round(self.holdout_fraction * n))) if n >= 10 else 0
        val = perm[:n_val]
        trn = perm[n_val:]
        if self.task == "binary":
            ybar = float(np.clip(y[trn].mean(), PROB_CLIP, 1 - PROB_CLIP))
            self.base = np.log(ybar / (1 - ybar))
        else:
            self.base = float(y[trn].mean())
        f = np.full(n, self.base)
        best_loss = self._loss(y[val], f[val]) if n_val else np.inf
        best_len = 0
        stale = 0
        for _ in range(self.n_rounds):
            if self.task == "binary":
                grad = y[trn] - _sigmoid(f[trn])
            else:
                grad = y[trn] - f[trn]
            g_full = np.zeros(n)
            g_full[trn] = grad
            tree = _grow_tree(X, g_full, trn, self.max_depth, self.min_leaf)
            pred = np.zeros(n)
            _tree_predict(tree, X, pred, np.arange(n))
            f += self.learning_rate * pred
            self.trees.append(tree)
            if n_val:
                loss = self._loss(y[val], f[val])
                if loss < best_loss - 1e-12:
                    best_loss = loss
                    best_len = len(self.trees)
                    stale = 0
                else:
                    stale += 1
                    if stale >= self.patience:
                        break
        if n_val:
            self.trees = self.trees[:best_len]
        return self

    def _loss(self, y, f):
        if self.task == "binary":
            return float(np.mean(np.log1p(np.exp(-np.abs(f))) + np.maximum(f, 0) - y * f))
        return float(np.mean((y - f) ** 2))

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        f = np.full(X.shape[0], self.base)
        idx = np.arange(X.shape[0])
        out = np.empty(X.shape[0])
        for tree in self.trees:
            _tree_predict(tree, X, out, idx)
            f += self.learning_rate * out
        if self.task == "binary":
            return _sigmoid(f)
        return f


class _LassoLearnerModel:
    def __init__(self, fit, binary):
        self.fit = fit
        self.binary = binary

    def predict(self, X):
        pred = self.fit.predict(X)
        if self.binary:
            return np.clip(pred, PROB_CLIP, 1 - PROB_CLIP)
        return pred


def fit_learner(learner: Learner, X, y, task, seed):
    """Fit one nuisance model; returns an object with ``predict(X)``.

    task is "regression" or "binary"; binary predictions are probabilities.
    """
    if task not in ("regression", "binary"):
        raise InvalidInputError(f"unknown task {task!r}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != len(y):
        raise InvalidInputError("X and y lengths differ")
    if X.shape[0] < 10:
        raise InvalidInputError("need at least 10 rows to fit a nuisance model")
    hp = learner.hyperparameters
    if np.all(y == y[0]):
        value = y[0] if task == "regression" else np.clip(y[0], PROB_CLIP, 1 - PROB_CLIP)
        return ConstantModel(value)
    if learner.kind == "ridge":
        alpha = float(hp.get("alpha", 0.01))
        if task == "binary":
            return _fit_logistic_ridge(X, y, alpha)
        return _fit_ridge(X, y, alpha)
    if learner.kind == "lasso":
        n_lambda = int(hp.get("n_lambda", 50))
        design = WeightedDesign(
            design=X,
            response=y,
            weights=np.ones(len(y)),
            penalty_factors=np.ones(X.shape[1]),
        )
        path = fit_lasso_path(design, n_lambda=n_lambda)
        folds = np.random.default_rng(seed).permutation(len(y)) % 5
        cv = cross_validate_lambda(design, folds, path.lambdas)
        return _LassoLearnerModel(path.fits[cv.index], binary=task == "binary")
    model = BoostedTreesModel(
        task=task,
        n_rounds=int(hp.get("rounds", 200)),
        learning_rate=float(hp.get("learning_rate", 0.1)),
        max_depth=int(hp.get("depth", 2)),
        min_leaf=int(hp.get("min_leaf", 5)),
        holdout_fraction=float(hp.get("holdout_fraction", 0.2)),
        patience=int(hp.get("patience", 10)),
    )
    return model.fit(X, y, seed)
