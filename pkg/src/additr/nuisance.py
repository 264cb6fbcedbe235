"""Cross-fitted propensity, main-effect, and reference-arm models.

Each fold's predictions come from models trained on the other folds only.
The main effect is the average of two arm-specific outcome regressions,
which also yields the reference-arm (a = -1) predictions needed by the
concordance criterion at no extra cost.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError
from .learners import Learner, fit_learner

DEFAULT_CLIP = 0.05


@dataclass
class FoldPartition:
    """A balanced random K-way split of n observation indices."""

    n: int
    K: int
    fold_of: np.ndarray

    def indices(self, k):
        return np.nonzero(self.fold_of == k)[0]


@dataclass
class NuisanceEstimates:
    """Out-of-fold nuisance predictions for every observation.

    pi_treat : P(A = 1 | x), clipped.
    pi_observed : P(A = a_i | x_i), consistent with pi_treat by arm.
    m_hat : average of the two arm-conditional outcome predictions.
    mu_ref_hat : reference-arm (a = -1) outcome predictions.
    fold_of : fold assignment used for cross-fitting.
    """

    pi_treat: np.ndarray
    pi_observed: np.ndarray
    m_hat: np.ndarray
    mu_ref_hat: np.ndarray
    fold_of: np.ndarray


def make_folds(n, K, seed):
    """Uniformly random balanced partition; sizes differ by at most one."""
    if K < 2 or K > n:
        raise InvalidInputError(f"need 2 <= K <= n, got K={K}, n={n}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.intp)
    fold_of[rng.permutation(n)] = np.arange(n) % K
    return FoldPartition(n=n, K=K, fold_of=fold_of)


def crossfit_nuisance(
    data,
    K,
    learners,
    eps_clip=DEFAULT_CLIP,
    seed=0,
):
    """Cross-fit the propensity and arm-specific outcome models.

    learners : {"propensity": Learner, "outcome": Learner}.
    Each fold's three models consume independent random streams derived from
    ``seed``, so results do not depend on fit order. Raises if some training
    complement lacks one of the arms (use a smaller K).
    """
    X, y, a = data.X, data.y, data.a
    n = len(y)
    if not (0 < eps_clip < 0.5):
        raise InvalidInputError("eps_clip must lie in (0, 0.5)")
    prop_learner = learners["propensity"]
    out_learner = learners["outcome"]
    part = make_folds(n, K, seed)
    streams = np.random.SeedSequence(seed).spawn(K)
    pi_treat = np.empty(n)
    mu_pos = np.empty(n)
    mu_neg = np.empty(n)
    treated = a == 1
    for k in range(K):
        held = part.fold_of == k
        train = ~held
        pos = train & treated
        neg = train & ~treated
        if pos.sum() == 0 or neg.sum() == 0:
            raise InvalidInputError(
                f"training complement of fold {k} lacks a treatment arm; "
                "use a smaller K"
            )
        s_pi, s_pos, s_neg = streams[k].spawn(3)
        pi_model = fit_learner(
            prop_learner, X[train], treated[train].astype(np.float64),
            "binary", s_pi,
        )
        pos_model = fit_learner(out_learner, X[pos], y[pos], "regression", s_pos)
        neg_model = fit_learner(out_learner, X[neg], y[neg], "regression", s_neg)
        pi_treat[held] = pi_model.predict(X[held])
        mu_pos[held] = pos_model.predict(X[held])
        mu_neg[held] = neg_model.predict(X[held])
    pi_treat = np.clip(pi_treat, eps_clip, 1.0 - eps_clip)
    pi_observed = np.where(treated, pi_treat, 1.0 - pi_treat)
    return NuisanceEstimates(
        pi_treat=pi_treat,
        pi_observed=pi_observed,
        m_hat=0.5 * (mu_pos + mu_neg),
        mu_ref_hat=mu_neg,
        fold_of=part.fold_of,
    )
