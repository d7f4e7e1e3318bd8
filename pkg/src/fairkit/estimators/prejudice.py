"""Logistic regression with a prejudice-index penalty.

The prejudice index is the mutual information between the model's soft
predictions and the protected attribute, estimated on the training data:

    PI = 1/n * sum_i sum_c P_i(c) * log(P(c | s_i) / P(c))

where P_i(c) is the predicted probability of class c for row i, P(c | s) is the
mean of P_i(c) over the rows of group s and P(c) is the mean over all rows.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..core import UndefinedMetricError, check_binary, check_same_length
from .logistic import DEFAULT_L2, DEFAULT_MAX_ITER, DEFAULT_TOL, LogisticRegression, gradient_descent, logistic_loss

DEFAULT_ETA = 1.0
_EPS = 1e-12


def _group_means(p, s):
    d = s == 1
    return p[~d].mean(), p[d].mean(), p.mean()


def prejudice_index(p, s) -> float:
    """Mutual-information estimate between soft predictions ``p = P(y=1)`` and ``s``."""
    p = np.asarray(p, dtype=float)
    s = check_binary(s, "s")
    g0, g1, g = _group_means(p, s)
    gs = np.where(s == 1, g1, g0)
    gs = np.clip(gs, _EPS, 1 - _EPS)
    g = min(max(g, _EPS), 1 - _EPS)
    return float(np.mean(p * np.log(gs / g) + (1 - p) * np.log((1 - gs) / (1 - g))))


def prejudice_index_grad_p(p, s) -> np.ndarray:
    """Gradient of :func:`prejudice_index` with respect to each ``p_i``.

    The terms through the group and overall means cancel, leaving only the
    log-ratio at each row.
    """
    n = len(p)
    g0, g1, g = _group_means(p, s)
    gs = np.clip(np.where(s == 1, g1, g0), _EPS, 1 - _EPS)
    g = min(max(g, _EPS), 1 - _EPS)
    return (np.log(gs / g) - np.log((1 - gs) / (1 - g))) / n


def prr_objective(theta, X, y, s, w, l2_lambda, eta, penalty="l2"):
    loss, grad = logistic_loss(theta, X, y, w, l2_lambda, penalty)
    if eta == 0:
        return loss, grad
    p = expit(X @ theta[:-1] + theta[-1])
    dpi = prejudice_index_grad_p(p, s) * p * (1 - p)
    grad = grad.copy()
    grad[:-1] += eta * (X.T @ dpi)
    grad[-1] += eta * dpi.sum()
    return loss + eta * prejudice_index(p, s), grad


class PrejudiceRemover(LogisticRegression):
    """Logistic regression trained with an additional ``eta * PI`` term.

    With ``eta = 0`` the objective is exactly that of :class:`LogisticRegression`.
    """

    kind = "prr"

    def __init__(self, eta=DEFAULT_ETA, l2_lambda=DEFAULT_L2, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL, penalty="l2"):
        super().__init__(l2_lambda, max_iter, tol, penalty)
        if eta < 0:
            raise ValueError("eta must be non-negative")
        self.eta = float(eta)

    def get_params(self) -> dict:
        return {**super().get_params(), "eta": self.eta}

    def fit(self, X, y, s, sample_weight=None):
        X, y, w = self._prepare(X, y, sample_weight)
        s = check_binary(s, "s")
        check_same_length(X=X, s=s)
        if s.min() == s.max():
            raise UndefinedMetricError("prejudice index needs both protected groups in the training data")
        objective = lambda theta: prr_objective(theta, X, y, s, w, self.l2_lambda, self.eta, self.penalty)  # noqa: E731
        result = gradient_descent(objective, np.zeros(X.shape[1] + 1), self.max_iter, self.tol)
        self._set_fit(*result)
        return self


def fit_prejudice_remover(
    X, y, s, eta=DEFAULT_ETA, l2_lambda=DEFAULT_L2, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL, penalty="l2"
):
    return PrejudiceRemover(eta, l2_lambda, max_iter, tol, penalty).fit(X, y, s)
