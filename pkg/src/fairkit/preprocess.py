"""Fairness-aware transformations of training data.

All functions assume ``s == 1`` is the disadvantaged group and ``y == 1`` the
desirable label. Rankers are factories (e.g. the :class:`LogisticRegression`
class) producing unfitted models with ``fit(X, y)`` and ``predict_proba(X)``;
they are trained on the features with ``s`` appended as a last column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Dataset, InfeasibleError, UndefinedMetricError, partition_groups
from .estimators.logistic import LogisticRegression

Ranker = Callable[[], object]

_CELLS = ("d_pos", "d_neg", "a_pos", "a_neg")


@dataclass(frozen=True)
class RelabelPlan:
    promote: np.ndarray
    demote: np.ndarray
    ranker_id: str

    @property
    def n_changed(self) -> int:
        return len(self.promote) + len(self.demote)


def _ranker_id(ranker) -> str:
    return getattr(ranker, "__name__", type(ranker).__name__)


def rank_scores(data: Dataset, ranker: Ranker = LogisticRegression) -> np.ndarray:
    """Fit a fresh ``ranker`` on (X, s) -> y and return P(y=1) for every row."""
    features = np.column_stack([data.X, data.s])
    model = ranker()
    model.fit(features, data.y)
    return np.asarray(model.predict_proba(features), dtype=float)


def _top(idx: np.ndarray, scores: np.ndarray, count: int, highest: bool) -> np.ndarray:
    # ties broken by lower observation index
    key = -scores[idx] if highest else scores[idx]
    order = np.lexsort((idx, key))
    return idx[order[:count]]


def relabel_count(n_d_pos: int, n_d: int, n_a_pos: int, n_a: int) -> int:
    """Number of promotions (and demotions) that minimizes the post-relabel |md|.

    Zero when the disadvantaged group is not behind. Ties go to the smaller count.
    """
    md = n_a_pos / n_a - n_d_pos / n_d
    if md <= 0:
        return 0
    n = n_a + n_d
    guess = int(np.floor(n_d * n_a * md / n))
    candidates = [c for c in (guess, guess + 1) if c >= 0]
    gaps = [abs((n_a_pos - c) / n_a - (n_d_pos + c) / n_d) for c in candidates]
    return candidates[int(np.argmin(gaps))]


def relabel(data: Dataset, ranker: Ranker = LogisticRegression) -> tuple[np.ndarray, RelabelPlan]:
    """Massage labels: promote top-ranked disadvantaged negatives and demote
    bottom-ranked advantaged positives until group positive rates match."""
    g = partition_groups(data.y, data.s)
    n_d = len(g.d_pos) + len(g.d_neg)
    n_a = len(g.a_pos) + len(g.a_neg)
    if n_d == 0 or n_a == 0:
        raise UndefinedMetricError("relabelling needs both protected groups")
    if data.y.min() == data.y.max():
        raise UndefinedMetricError("relabelling needs both labels")
    count = relabel_count(len(g.d_pos), n_d, len(g.a_pos), n_a)
    shortfall = max(count - len(g.d_neg), count - len(g.a_pos))
    if shortfall > 0:
        raise InfeasibleError(
            f"relabelling needs {count} candidates per side but only has "
            f"{len(g.d_neg)} disadvantaged negatives and {len(g.a_pos)} advantaged positives "
            f"(short by {shortfall})"
        )
    y_new = data.y.copy()
    if count == 0:
        empty = np.array([], dtype=np.int64)
        return y_new, RelabelPlan(empty, empty, _ranker_id(ranker))
    scores = rank_scores(data, ranker)
    promote = np.sort(_top(g.d_neg, scores, count, highest=True))
    demote = np.sort(_top(g.a_pos, scores, count, highest=False))
    y_new[promote] = 1
    y_new[demote] = 0
    return y_new, RelabelPlan(promote, demote, _ranker_id(ranker))


def _cell_sizes(y, s):
    g = partition_groups(y, s)
    sizes = {name: len(getattr(g, name)) for name in _CELLS}
    empty = [name for name, k in sizes.items() if k == 0]
    if empty:
        raise UndefinedMetricError(f"empty (group, label) cells: {empty}")
    return g, sizes


def _expected_sizes(y, s):
    n = len(y)
    n_d = int(s.sum())
    n_pos = int(y.sum())
    margins = {
        "d_pos": (n_d, n_pos),
        "d_neg": (n_d, n - n_pos),
        "a_pos": (n - n_d, n_pos),
        "a_neg": (n - n_d, n - n_pos),
    }
    return {k: a * b / n for k, (a, b) in margins.items()}


def reweigh(y, s) -> np.ndarray:
    """Per-row weight expected/observed count of the row's (group, label) cell."""
    g, sizes = _cell_sizes(y, s)
    expected = _expected_sizes(np.asarray(y), np.asarray(s))
    w = np.empty(len(y))
    for name in _CELLS:
        w[getattr(g, name)] = expected[name] / sizes[name]
    return w


def _round_half_away(x: float) -> int:
    return int(np.sign(x) * np.floor(abs(x) + 0.5))


def target_cell_sizes(y, s) -> dict[str, int]:
    """Expected cell sizes under independence of y and s, rounded to integers summing to n."""
    y = np.asarray(y)
    s = np.asarray(s)
    expected = _expected_sizes(y, s)
    target = {k: _round_half_away(v) for k, v in expected.items()}
    drift = len(y) - sum(target.values())
    if drift:
        largest = max(_CELLS, key=lambda k: (target[k], -_CELLS.index(k)))
        target[largest] += drift
    return target


def _assemble(data: Dataset, parts) -> Dataset:
    idx = np.sort(np.concatenate(parts).astype(np.int64), kind="stable")
    return data.subset(idx)


def uniform_sample(data: Dataset, rng_seed: int) -> Dataset:
    """Resample each (group, label) cell at random to its expected size.

    Shrinking cells are subsampled without replacement; growing cells keep every
    row and add randomly drawn duplicates.
    """
    g, sizes = _cell_sizes(data.y, data.s)
    target = target_cell_sizes(data.y, data.s)
    rng = np.random.default_rng(rng_seed)
    parts = []
    for name in _CELLS:
        idx = getattr(g, name)
        want = target[name]
        if want <= sizes[name]:
            parts.append(rng.choice(idx, size=want, replace=False))
        else:
            parts.append(np.concatenate([idx, rng.choice(idx, size=want - sizes[name], replace=True)]))
    return _assemble(data, parts)


def preferential_sample(data: Dataset, ranker: Ranker = LogisticRegression, rng_seed: int = 0) -> Dataset:
    """Resize each (group, label) cell to its expected size by ranker score.

    Cells that must grow duplicate their highest-scored rows (cycling through the
    ranking if more copies are needed than rows); cells that must shrink drop
    their highest-scored rows. ``rng_seed`` is unused by the deterministic
    ranking itself and kept for interface symmetry with :func:`uniform_sample`.
    """
    g, sizes = _cell_sizes(data.y, data.s)
    target = target_cell_sizes(data.y, data.s)
    scores = None
    parts = []
    for name in _CELLS:
        idx = getattr(g, name)
        delta = target[name] - sizes[name]
        if delta == 0:
            parts.append(idx)
            continue
        if scores is None:
            scores = rank_scores(data, ranker)
        ranked = _top(idx, scores, len(idx), highest=True)
        if delta > 0:
            parts.append(np.concatenate([idx, np.resize(ranked, delta)]))
        else:
            if -delta > len(idx):
                raise InfeasibleError(f"cell {name} has {len(idx)} rows, cannot remove {-delta}")
            parts.append(ranked[-delta:])
    return _assemble(data, parts)
