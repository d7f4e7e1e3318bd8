"""Additive counterfactually fair classifier with linear residualizers.

Each feature is regressed on the protected attribute alone; the final classifier
only sees the residuals, i.e. the part of each feature that ``s`` does not
linearly explain.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, logit

from ..core import UndefinedMetricError, ValidationError, check_binary, check_features, check_same_length
from .logistic import LogisticRegression

CONTINUOUS = "continuous"
BINARY = "binary"
_P_CLIP = 1e-12


def infer_feature_kinds(X) -> list[str]:
    """Columns whose values are all 0/1 are binary, the rest continuous."""
    X = check_features(X)
    return [BINARY if np.isin(X[:, j], (0.0, 1.0)).all() else CONTINUOUS for j in range(X.shape[1])]


def fit_residualizers(X, s, feature_kinds):
    """Per-column ``(intercept, slope)`` of the regression of each feature on ``s``.

    Continuous columns use ordinary least squares. Binary columns use a logistic
    regression on ``s``; with a single binary regressor the maximum-likelihood
    fit reproduces each group's mean, so it is computed in closed form
    (probabilities clipped away from 0 and 1 to keep the logits finite).
    """
    n, m = X.shape
    design = np.column_stack([np.ones(n), s])
    params = np.linalg.lstsq(design, X, rcond=None)[0]
    for j, kind in enumerate(feature_kinds):
        if kind == BINARY:
            p0 = np.clip(X[s == 0, j].mean(), _P_CLIP, 1 - _P_CLIP)
            p1 = np.clip(X[s == 1, j].mean(), _P_CLIP, 1 - _P_CLIP)
            params[:, j] = (logit(p0), logit(p1) - logit(p0))
    return params


def predict_features(params, feature_kinds, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    lin = params[0][None, :] + s[:, None] * params[1][None, :]
    binary = np.array([k == BINARY for k in feature_kinds])
    lin[:, binary] = expit(lin[:, binary])
    return lin


class LinearACFClassifier:
    """Residualize every feature on ``s``, then fit ``estimator`` on the residuals.

    ``estimator`` is any unfitted classifier with ``fit(X, y, sample_weight)``
    and ``predict_proba(X)``; logistic regression by default.
    """

    kind = "acf"

    def __init__(self, estimator=None, feature_kinds=None):
        self.estimator = estimator if estimator is not None else LogisticRegression()
        self.feature_kinds = feature_kinds

    def fit(self, X, y, s, sample_weight=None):
        X = check_features(X)
        y = check_binary(y, "y")
        s = check_binary(s, "s")
        check_same_length(X=X, y=y, s=s)
        if s.min() == s.max():
            raise UndefinedMetricError("residualizing on a constant protected attribute is degenerate")
        kinds = list(self.feature_kinds) if self.feature_kinds is not None else infer_feature_kinds(X)
        if len(kinds) != X.shape[1]:
            raise ValidationError(f"{len(kinds)} feature kinds for {X.shape[1]} columns")
        unknown = set(kinds) - {CONTINUOUS, BINARY}
        if unknown:
            raise ValidationError(f"unknown feature kinds: {sorted(unknown)}")
        self.feature_kinds_ = kinds
        self.residualizer_params_ = fit_residualizers(X, s, kinds)
        self.estimator.fit(self.residuals(X, s), y, sample_weight=sample_weight)
        return self

    def residuals(self, X, s) -> np.ndarray:
        X = check_features(X)
        if s is None:
            raise ValidationError("the protected attribute is required to residualize features")
        s = check_binary(s, "s")
        check_same_length(X=X, s=s)
        if X.shape[1] != len(self.feature_kinds_):
            raise ValidationError(f"expected {len(self.feature_kinds_)} features, got {X.shape[1]}")
        return X - predict_features(self.residualizer_params_, self.feature_kinds_, s)

    def predict_proba(self, X, s) -> np.ndarray:
        return self.estimator.predict_proba(self.residuals(X, s))

    def predict(self, X, s) -> np.ndarray:
        return (self.predict_proba(X, s) >= 0.5).astype(np.int64)


def fit_linear_acf(X, y, s, feature_kinds=None, estimator=None):
    return LinearACFClassifier(estimator, feature_kinds).fit(X, y, s)


def predict_acf(model: LinearACFClassifier, X, s):
    """Return ``(labels, scores)`` for residualize-then-classify prediction."""
    scores = model.predict_proba(X, s)
    return (scores >= 0.5).astype(np.int64), scores
