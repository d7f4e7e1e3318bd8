"""Discrimination and utility scores.

Group-level: :func:`mean_difference`, :func:`normalized_mean_difference`.
Individual-level: :func:`consistency`, :func:`situation_test_score`.
Utility: :func:`auc`. Correlation between the two: :func:`pearson_r_with_ci`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .core import (
    UndefinedMetricError,
    ValidationError,
    check_binary,
    check_features,
    check_same_length,
)

Z_95 = 1.96
DEFAULT_K = 5


@dataclass(frozen=True)
class MetricResult:
    metric_name: str
    value: float
    ci_low: float = math.nan
    ci_high: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


def _group_rates(y, s):
    y = check_binary(y, "y")
    s = check_binary(s, "s")
    check_same_length(y=y, s=s)
    n_d = int(s.sum())
    n_a = len(s) - n_d
    if n_a == 0 or n_d == 0:
        raise UndefinedMetricError(
            f"mean difference needs both groups, got {n_a} advantaged and {n_d} disadvantaged"
        )
    p_a = y[s == 0].mean()
    p_d = y[s == 1].mean()
    return y, s, n_a, n_d, float(p_a), float(p_d)


def mean_difference(y, s) -> MetricResult:
    """P(y=1 | advantaged) - P(y=1 | disadvantaged), with a 95% interval.

    The interval is the normal approximation around the difference, using the
    pooled positive rate to estimate the standard error (not clipped to [-1, 1]).
    """
    y, _, n_a, n_d, p_a, p_d = _group_rates(y, s)
    md = p_a - p_d
    p = float(y.mean())
    half = Z_95 * math.sqrt(p * (1 - p) * (1 / n_a + 1 / n_d))
    return MetricResult("mean_difference", md, md - half, md + half)


def max_mean_difference(y, s) -> float:
    """Largest mean difference reachable by moving the positive labels between groups."""
    y, s, n_a, n_d, _, _ = _group_rates(y, s)
    n = len(y)
    p_pos = y.mean()
    return float(min(p_pos / (n_a / n), (1 - p_pos) / (n_d / n)))


def normalized_mean_difference(y, s) -> MetricResult:
    md = mean_difference(y, s)
    d_max = max_mean_difference(y, s)
    if d_max == 0:
        raise UndefinedMetricError("normalized mean difference is undefined when all labels are equal")
    return MetricResult(
        "normalized_mean_difference", md.value / d_max, md.ci_low / d_max, md.ci_high / d_max
    )


def _squared_distances(X: np.ndarray, rows: np.ndarray) -> np.ndarray:
    # exact per-feature differences keep distances identical under row permutation
    return ((X[rows, None, :] - X[None, :, :]) ** 2).sum(axis=2)


def nearest_neighbors(X, k: int = DEFAULT_K, rows=None, chunk: int = 128) -> np.ndarray:
    """Indices of the ``k`` Euclidean nearest neighbors of each query row.

    The query point is never its own neighbor. Distance ties go to the lower index.
    """
    X = check_features(X)
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValidationError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    rows = np.arange(n) if rows is None else np.asarray(rows, dtype=np.int64)
    out = np.empty((len(rows), k), dtype=np.int64)
    for start in range(0, len(rows), chunk):
        block = rows[start : start + chunk]
        d = _squared_distances(X, block)
        d[np.arange(len(block)), block] = np.inf
        out[start : start + len(block)] = np.argsort(d, axis=1, kind="stable")[:, :k]
    return out


def consistency(X, y, k: int = DEFAULT_K) -> float:
    """Mean absolute label disagreement between each point and its k neighbors.

    0 means every neighborhood agrees with its center; 1 means none do.
    """
    y = check_binary(y, "y")
    X = check_features(X)
    check_same_length(X=X, y=y)
    nn = nearest_neighbors(X, k)
    return float(np.abs(y[:, None] - y[nn]).mean())


def situation_test_score(X, y, s, k: int = DEFAULT_K) -> float:
    """Mean over disadvantaged points of the mean difference among their k neighbors.

    Neighborhoods lacking one of the groups score 0 and negative scores are
    clamped to 0, so the result lies in [0, 1].
    """
    y = check_binary(y, "y")
    s = check_binary(s, "s")
    X = check_features(X)
    check_same_length(X=X, y=y, s=s)
    rows = np.flatnonzero(s == 1)
    if rows.size == 0:
        raise UndefinedMetricError("situation test score needs at least one disadvantaged observation")
    nn = nearest_neighbors(X, k, rows=rows)
    ys, ss = y[nn], s[nn]
    n_a = (ss == 0).sum(axis=1)
    n_d = (ss == 1).sum(axis=1)
    pos_a = (ys * (ss == 0)).sum(axis=1)
    pos_d = (ys * (ss == 1)).sum(axis=1)
    both = (n_a > 0) & (n_d > 0)
    scores = np.zeros(len(rows))
    scores[both] = pos_a[both] / n_a[both] - pos_d[both] / n_d[both]
    return float(np.clip(scores, 0.0, None).mean())


def auc(y_true, scores) -> float:
    """Area under the ROC curve as the Mann-Whitney statistic (ties count one half)."""
    y_true = check_binary(y_true, "y_true")
    scores = np.asarray(scores, dtype=float)
    check_same_length(y_true=y_true, scores=scores)
    n_pos = int(y_true.sum())
    n_neg = len(y_true) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes in y_true")
    ranks = rankdata(scores)
    u = ranks[y_true == 1].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def pearson_r_with_ci(x, y) -> MetricResult:
    """Sample Pearson correlation with a Fisher-z 95% interval."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    check_same_length(x=x, y=y)
    n = len(x)
    if n < 4:
        raise UndefinedMetricError(f"Pearson interval needs at least 4 points, got {n}")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx, syy = float(xc @ xc), float(yc @ yc)
    if sxx == 0 or syy == 0:
        raise UndefinedMetricError("Pearson correlation is undefined for a constant vector")
    r = float(np.clip((xc @ yc) / math.sqrt(sxx * syy), -1.0, 1.0))
    with np.errstate(divide="ignore"):
        z = np.arctanh(r)
    half = Z_95 / math.sqrt(n - 3)
    return MetricResult("pearson_r", r, float(np.tanh(z - half)), float(np.tanh(z + half)))
