"""CART classification trees (weighted Gini) and bagged random forests."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..core import ValidationError, check_binary, check_features, check_same_length
from .logistic import check_weights

DEFAULT_N_ESTIMATORS = 100


@njit(cache=True)
def gini_split_score(wpos_left, wtot_left, wpos_right, wtot_right):
    """Weighted Gini impurity of a two-way split, normalized by the parent weight."""
    total = wtot_left + wtot_right
    score = 0.0
    if wtot_left > 0:
        p = wpos_left / wtot_left
        score += wtot_left * 2.0 * p * (1.0 - p)
    if wtot_right > 0:
        p = wpos_right / wtot_right
        score += wtot_right * 2.0 * p * (1.0 - p)
    return score / total if total > 0 else 0.0


@njit(cache=True)
def _build_tree(X, y, w, max_depth, min_samples_leaf, max_features, seed):
    np.random.seed(seed)
    n, m = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)
    n_samples = np.zeros(cap, np.int64)
    impurity = np.zeros(cap)

    idx = np.arange(n)
    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    top = 0
    st_node[0], st_start[0], st_end[0], st_depth[0] = 0, 0, n, 0
    top = 1
    node_count = 1
    scratch = np.empty(n, np.int64)

    while top > 0:
        top -= 1
        node, start, end, depth = st_node[top], st_start[top], st_end[top], st_depth[top]
        cnt = end - start
        wpos = 0.0
        wtot = 0.0
        ypos = 0
        for t in range(start, end):
            i = idx[t]
            wtot += w[i]
            wpos += w[i] * y[i]
            ypos += y[i]
        p = wpos / wtot if wtot > 0 else ypos / cnt
        value[node] = p
        n_samples[node] = cnt
        impurity[node] = 2.0 * p * (1.0 - p)
        if impurity[node] <= 0.0 or (max_depth >= 0 and depth >= max_depth) or cnt < 2 * min_samples_leaf:
            continue

        if max_features < m:
            candidates = np.random.permutation(m)[:max_features]
        else:
            candidates = np.arange(m)

        best_score = np.inf
        best_f = -1
        best_thr = 0.0
        rows = idx[start:end]
        for f in candidates:
            vals = X[rows, f]
            order = np.argsort(vals, kind="mergesort")
            cum_wp = 0.0
            cum_wt = 0.0
            for i in range(cnt - min_samples_leaf):
                r = rows[order[i]]
                cum_wt += w[r]
                cum_wp += w[r] * y[r]
                if i + 1 < min_samples_leaf:
                    continue
                lo = vals[order[i]]
                hi = vals[order[i + 1]]
                if hi <= lo:
                    continue
                score = gini_split_score(cum_wp, cum_wt, wpos - cum_wp, wtot - cum_wt)
                if score < best_score:
                    best_score = score
                    best_f = f
                    thr = 0.5 * (lo + hi)
                    best_thr = thr if thr < hi else lo
        if best_f < 0:
            continue

        n_left = 0
        n_right = 0
        for t in range(start, end):
            i = idx[t]
            if X[i, best_f] <= best_thr:
                idx[start + n_left] = i
                n_left += 1
            else:
                scratch[n_right] = i
                n_right += 1
        for t in range(n_right):
            idx[start + n_left + t] = scratch[t]

        feature[node] = best_f
        threshold[node] = best_thr
        lchild = node_count
        rchild = node_count + 1
        node_count += 2
        left[node] = lchild
        right[node] = rchild
        mid = start + n_left
        st_node[top], st_start[top], st_end[top], st_depth[top] = rchild, mid, end, depth + 1
        top += 1
        st_node[top], st_start[top], st_end[top], st_depth[top] = lchild, start, mid, depth + 1
        top += 1

    return (
        feature[:node_count],
        threshold[:node_count],
        left[:node_count],
        right[:node_count],
        value[:node_count],
        n_samples[:node_count],
        impurity[:node_count],
    )


@njit(cache=True)
def _apply(X, feature, threshold, left, right, value):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


def weighted_gini(y, w, left_mask) -> float:
    """Weighted Gini impurity of splitting ``y`` by ``left_mask``."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    left_mask = np.asarray(left_mask, dtype=bool)
    return float(
        gini_split_score(
            float(w[left_mask] @ y[left_mask]),
            float(w[left_mask].sum()),
            float(w[~left_mask] @ y[~left_mask]),
            float(w[~left_mask].sum()),
        )
    )


_TREE_ARRAYS = ("feature", "threshold", "left", "right", "value", "n_samples", "impurity")


class DecisionTree:
    """CART classifier. Leaves hold the weighted fraction of positive labels.

    ``max_depth=None`` grows until leaves are pure or ``min_samples_leaf`` stops it.
    ``max_features`` limits the features considered per node (drawn with ``seed``).
    """

    kind = "tree"

    def __init__(self, max_depth=None, min_samples_leaf=1, max_features=None, seed=0):
        if min_samples_leaf < 1:
            raise ValidationError("min_samples_leaf must be >= 1")
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.max_features = max_features
        self.seed = int(seed)

    def get_params(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "max_features": self.max_features,
            "seed": self.seed,
        }

    def fit(self, X, y, sample_weight=None):
        X = check_features(X)
        y = check_binary(y, "y")
        check_same_length(X=X, y=y)
        w = check_weights(sample_weight, len(y))
        m = X.shape[1]
        max_features = m if self.max_features is None else max(1, min(int(self.max_features), m))
        depth = -1 if self.max_depth is None else int(self.max_depth)
        arrays = _build_tree(
            np.ascontiguousarray(X), y, w, depth, self.min_samples_leaf, max_features, self.seed % (2**32)
        )
        for name, arr in zip(_TREE_ARRAYS, arrays):
            setattr(self, name + "_", arr)
        self.n_features_ = m
        return self

    @property
    def node_count(self) -> int:
        return len(self.feature_)

    def predict_proba(self, X) -> np.ndarray:
        X = check_features(X)
        if X.shape[1] != self.n_features_:
            raise ValidationError(f"expected {self.n_features_} features, got {X.shape[1]}")
        return _apply(np.ascontiguousarray(X), self.feature_, self.threshold_, self.left_, self.right_, self.value_)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


class RandomForest:
    """Bagged CART trees with sqrt(m) features tried per split.

    Every tree gets its own bootstrap and seed spawned from ``seed``, so results
    do not depend on fitting order.
    """

    kind = "forest"

    def __init__(self, n_estimators=DEFAULT_N_ESTIMATORS, max_depth=None, min_samples_leaf=1, seed=0):
        if n_estimators < 1:
            raise ValidationError("n_estimators must be >= 1")
        self.n_estimators = int(n_estimators)
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.seed = int(seed)

    def get_params(self) -> dict:
        return {
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "seed": self.seed,
        }

    def fit(self, X, y, sample_weight=None):
        X = check_features(X)
        y = check_binary(y, "y")
        check_same_length(X=X, y=y)
        w = check_weights(sample_weight, len(y))
        n, m = X.shape
        max_features = max(1, int(math.sqrt(m)))
        self.trees_ = []
        for child in np.random.SeedSequence(self.seed).spawn(self.n_estimators):
            rng = np.random.default_rng(child)
            counts = np.bincount(rng.integers(0, n, n), minlength=n)
            rows = np.flatnonzero(counts)
            tree = DecisionTree(self.max_depth, self.min_samples_leaf, max_features, int(rng.integers(2**31)))
            tree.fit(X[rows], y[rows], w[rows] * counts[rows])
            self.trees_.append(tree)
        self.n_features_ = m
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = check_features(X)
        if X.shape[1] != self.n_features_:
            raise ValidationError(f"expected {self.n_features_} features, got {X.shape[1]}")
        X = np.ascontiguousarray(X)
        total = np.zeros(X.shape[0])
        for t in self.trees_:
            total += _apply(X, t.feature_, t.threshold_, t.left_, t.right_, t.value_)
        return total / len(self.trees_)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


def fit_tree(X, y, weights=None, max_depth=None, min_samples_leaf=1):
    return DecisionTree(max_depth, min_samples_leaf).fit(X, y, sample_weight=weights)


def fit_forest(X, y, weights=None, n_estimators=DEFAULT_N_ESTIMATORS, max_depth=None, min_samples_leaf=1, seed=0):
    return RandomForest(n_estimators, max_depth, min_samples_leaf, seed).fit(X, y, sample_weight=weights)
