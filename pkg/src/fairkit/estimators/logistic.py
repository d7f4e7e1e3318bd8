"""L2/L1-regularized logistic regression fit by batch gradient descent."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.special import expit

from ..core import ValidationError, check_binary, check_features, check_same_length

DEFAULT_L2 = 1.0
DEFAULT_MAX_ITER = 1000
DEFAULT_TOL = 1e-6

_ARMIJO = 1e-4
_MIN_STEP = 1e-16


class ConvergenceWarning(UserWarning):
    pass


def check_weights(sample_weight, n: int) -> np.ndarray:
    if sample_weight is None:
        return np.ones(n)
    w = np.asarray(sample_weight, dtype=float)
    if w.shape != (n,):
        raise ValidationError(f"sample_weight must have shape ({n},), got {w.shape}")
    bad = np.flatnonzero(~np.isfinite(w) | (w < 0))
    if bad.size:
        raise ValidationError(f"sample_weight[{bad[0]}] = {w[bad[0]]} is not a finite non-negative weight")
    return w


def gradient_descent(objective, theta0: np.ndarray, max_iter: int, tol: float):
    """Minimize ``objective(theta) -> (value, grad)`` with backtracking line search.

    Each trial step starts from a Barzilai-Borwein estimate and is halved until
    the Armijo condition holds, so the objective never increases.
    Returns ``(theta, value, grad_norm, n_iter, converged, history)``.
    """
    theta = theta0.copy()
    f, g = objective(theta)
    history = [f]
    step = 1.0
    prev_theta = prev_g = None
    n_iter = 0
    converged = False
    for n_iter in range(1, max_iter + 1):
        gnorm2 = float(g @ g)
        if np.sqrt(gnorm2) <= tol:
            converged = True
            n_iter -= 1
            break
        if prev_theta is not None:
            ds, dg = theta - prev_theta, g - prev_g
            curv = float(ds @ dg)
            if curv > 0:
                step = float(ds @ ds) / curv
        while True:
            cand = theta - step * g
            f_new, g_new = objective(cand)
            if f_new <= f - _ARMIJO * step * gnorm2:
                break
            step *= 0.5
            if step < _MIN_STEP:
                break
        if step < _MIN_STEP:
            break
        prev_theta, prev_g = theta, g
        theta, f, g = cand, f_new, g_new
        history.append(f)
    else:
        converged = float(np.sqrt(g @ g)) <= tol
    return theta, f, float(np.sqrt(g @ g)), n_iter, converged, history


def logistic_loss(theta, X, y, w, l2_lambda, penalty="l2"):
    """Objective and gradient of the weighted, regularized negative log-likelihood.

    ``theta = [coef..., intercept]``; the intercept is not penalized.
    The total is divided by ``n`` so that tolerances do not scale with data size.
    """
    n = X.shape[0]
    coef, b = theta[:-1], theta[-1]
    z = X @ coef + b
    p = expit(z)
    loss = float(w @ (np.logaddexp(0.0, z) - y * z))
    r = w * (p - y)
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ r
    grad[-1] = r.sum()
    if penalty == "l2":
        loss += 0.5 * l2_lambda * float(coef @ coef)
        grad[:-1] += l2_lambda * coef
    else:
        loss += l2_lambda * float(np.abs(coef).sum())
        grad[:-1] += l2_lambda * np.sign(coef)
    return loss / n, grad / n


class LogisticRegression:
    """Binary logistic regression.

    ``predict_proba`` returns a 1-D vector of P(y=1 | x).
    """

    kind = "logistic"

    def __init__(self, l2_lambda=DEFAULT_L2, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL, penalty="l2"):
        if l2_lambda < 0:
            raise ValidationError("l2_lambda must be non-negative")
        if penalty not in ("l1", "l2"):
            raise ValidationError(f"penalty must be 'l1' or 'l2', got {penalty!r}")
        self.l2_lambda = float(l2_lambda)
        self.max_iter = int(max_iter)
        self.tol = float(tol)
        self.penalty = penalty

    def get_params(self) -> dict:
        return {"l2_lambda": self.l2_lambda, "max_iter": self.max_iter, "tol": self.tol, "penalty": self.penalty}

    def _prepare(self, X, y, sample_weight):
        X = check_features(X)
        y = check_binary(y, "y")
        check_same_length(X=X, y=y)
        return X, y.astype(float), check_weights(sample_weight, len(y))

    def _objective(self, X, y, w):
        return lambda theta: logistic_loss(theta, X, y, w, self.l2_lambda, self.penalty)

    def fit(self, X, y, sample_weight=None):
        X, y, w = self._prepare(X, y, sample_weight)
        theta, f, gnorm, n_iter, converged, history = gradient_descent(
            self._objective(X, y, w), np.zeros(X.shape[1] + 1), self.max_iter, self.tol
        )
        self._set_fit(theta, f, gnorm, n_iter, converged, history)
        return self

    def _set_fit(self, theta, f, gnorm, n_iter, converged, history):
        self.coef_ = theta[:-1].copy()
        self.intercept_ = float(theta[-1])
        self.fit_meta_ = {
            "n_iter": int(n_iter),
            "objective": float(f),
            "grad_norm": float(gnorm),
            "converged": bool(converged),
        }
        self.objective_history_ = list(history)
        if not converged:
            warnings.warn(
                f"{type(self).__name__} stopped after {n_iter} iterations with gradient norm {gnorm:.3g}",
                ConvergenceWarning,
                stacklevel=3,
            )

    def decision_function(self, X) -> np.ndarray:
        X = check_features(X)
        if X.shape[1] != self.coef_.shape[0]:
            raise ValidationError(f"expected {self.coef_.shape[0]} features, got {X.shape[1]}")
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


def fit_logistic(X, y, weights=None, l2_lambda=DEFAULT_L2, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL):
    return LogisticRegression(l2_lambda, max_iter, tol).fit(X, y, sample_weight=weights)
