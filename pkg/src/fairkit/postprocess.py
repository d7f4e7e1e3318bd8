"""Model-agnostic postprocessing of predictions in favor of the disadvantaged group."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import ConfigError, check_binary, check_features, check_same_length

DEFAULT_THETA = 0.6


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.5 < theta < 1.0:
        raise ConfigError(f"theta must lie in (0.5, 1), got {theta}")
    return theta


def _check_weights(weights, k: int) -> np.ndarray:
    if weights is None:
        return np.full(k, 1.0 / k)
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,) or not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ConfigError(f"weights must be {k} positive finite numbers, got {weights!r}")
    return w / w.sum()


def averaged_proba(estimators: Sequence, X, weights=None) -> np.ndarray:
    if len(estimators) == 0:
        raise ConfigError("at least one estimator is required")
    w = _check_weights(weights, len(estimators))
    probs = np.array([np.asarray(e.predict_proba(X), dtype=float) for e in estimators])
    return w @ probs


def critical_region(p, theta: float) -> np.ndarray:
    """Rows whose confidence ``max(p, 1 - p)`` is strictly below ``theta``."""
    p = np.asarray(p, dtype=float)
    return np.maximum(p, 1 - p) < _check_theta(theta)


def reject_option_scores(p, s, theta: float = DEFAULT_THETA) -> np.ndarray:
    """Scores after reject-option relabelling.

    Inside the critical region a disadvantaged row's score is reflected to the
    positive side of 0.5 and an advantaged row's to the negative side; rows
    outside keep their probability.
    """
    p = np.asarray(p, dtype=float)
    s = check_binary(s, "s")
    check_same_length(p=p, s=s)
    region = critical_region(p, theta)
    hi, lo = np.maximum(p, 1 - p), np.minimum(p, 1 - p)
    out = p.copy()
    out[region] = np.where(s[region] == 1, hi[region], lo[region])
    return out


def reject_option_labels(p, s, theta: float = DEFAULT_THETA) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    s = check_binary(s, "s")
    check_same_length(p=p, s=s)
    labels = (p >= 0.5).astype(np.int64)
    region = critical_region(p, theta)
    labels[region] = s[region]
    return labels


def roc_predict(estimators, X, s, theta: float = DEFAULT_THETA, weights=None) -> np.ndarray:
    """Reject-option classification over one or more fitted estimators."""
    if not isinstance(estimators, (list, tuple)):
        estimators = [estimators]
    return reject_option_labels(averaged_proba(estimators, X, weights), s, theta)


def daec_predict(estimators: Sequence, X, s) -> np.ndarray:
    """Where the estimators disagree, predict 1 for disadvantaged rows and 0 otherwise."""
    if len(estimators) == 0:
        raise ConfigError("at least one estimator is required")
    s = check_binary(s, "s")
    preds = np.array([np.asarray(e.predict(X), dtype=np.int64) for e in estimators])
    check_same_length(predictions=preds[0], s=s)
    agree = (preds == preds[0]).all(axis=0)
    return np.where(agree, preds[0], s)


class RejectOptionClassifier:
    """Fit one or more base estimators and relabel their low-confidence predictions.

    One estimator gives the single-classifier variant; several give the
    weighted-average variant.
    """

    kind = "roc"

    def __init__(self, estimators, theta: float = DEFAULT_THETA, weights=None):
        if not isinstance(estimators, (list, tuple)):
            estimators = [estimators]
        if len(estimators) == 0:
            raise ConfigError("at least one estimator is required")
        self.estimators = list(estimators)
        self.theta = _check_theta(theta)
        self.weights = None if weights is None else list(_check_weights(weights, len(self.estimators)))

    def fit(self, X, y, sample_weight=None):
        X = check_features(X)
        for e in self.estimators:
            e.fit(X, y, sample_weight=sample_weight)
        return self

    def base_proba(self, X) -> np.ndarray:
        return averaged_proba(self.estimators, X, self.weights)

    def predict_proba(self, X, s) -> np.ndarray:
        return reject_option_scores(self.base_proba(X), s, self.theta)

    def predict(self, X, s) -> np.ndarray:
        return reject_option_labels(self.base_proba(X), s, self.theta)


class DiscriminationAwareEnsemble:
    """Ensemble whose disputed predictions go to the disadvantaged group.

    ``predict_proba`` averages member probabilities and, on disputed rows,
    reflects the average to the side of 0.5 matching the assigned label.
    """

    kind = "daec"

    def __init__(self, estimators):
        if len(estimators) < 2:
            raise ConfigError("a discrimination-aware ensemble needs at least two estimators")
        self.estimators = list(estimators)

    def fit(self, X, y, sample_weight=None):
        X = check_features(X)
        for e in self.estimators:
            e.fit(X, y, sample_weight=sample_weight)
        return self

    def predict(self, X, s) -> np.ndarray:
        return daec_predict(self.estimators, X, s)

    def predict_proba(self, X, s) -> np.ndarray:
        s = check_binary(s, "s")
        p = averaged_proba(self.estimators, X)
        preds = np.array([e.predict(X) for e in self.estimators])
        disputed = ~(preds == preds[0]).all(axis=0)
        hi, lo = np.maximum(p, 1 - p), np.minimum(p, 1 - p)
        out = p.copy()
        out[disputed] = np.where(s[disputed] == 1, hi[disputed], lo[disputed])
        return out
