"""Shared data model: the (X, y, s) triple and its validation.

Conventions used throughout the package:

* ``y == 1`` is the desirable outcome, ``y == 0`` the undesirable one.
* ``s == 1`` marks the disadvantaged group, ``s == 0`` the advantaged group.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class FairkitError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(FairkitError, ValueError):
    pass


class UndefinedMetricError(FairkitError, ValueError):
    pass


class InfeasibleError(FairkitError, ValueError):
    pass


class ConfigError(FairkitError, ValueError):
    pass


class Groups(NamedTuple):
    """Index sets of the four (group, label) cells."""

    d_pos: np.ndarray
    d_neg: np.ndarray
    a_pos: np.ndarray
    a_neg: np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def check_binary(values, name: str = "values") -> np.ndarray:
    """Return ``values`` as an int64 vector, raising if any entry is not 0/1."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.dtype == bool:
        return arr.astype(np.int64)
    bad = np.flatnonzero(~np.isin(arr, (0, 1)))
    if bad.size:
        i = int(bad[0])
        raise ValidationError(f"{name}[{i}] = {arr[i].item()!r} is not binary (0/1)")
    return arr.astype(np.int64)


def check_features(X, name: str = "X") -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must have at least one row and one column, got {arr.shape}")
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        i, j = (int(v) for v in bad[0])
        raise ValidationError(f"{name}[{i}, {j}] = {arr[i, j]} is not finite")
    return arr


def check_same_length(**arrays) -> int:
    lengths = {k: len(v) for k, v in arrays.items()}
    if len(set(lengths.values())) > 1:
        desc = ", ".join(f"{k}={n}" for k, n in lengths.items())
        raise ValidationError(f"length mismatch: {desc}")
    return next(iter(lengths.values()))


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix, binary labels and binary protected attribute.

    Arrays are copied and marked read-only on construction.
    """

    X: np.ndarray
    y: np.ndarray
    s: np.ndarray
    feature_names: tuple[str, ...] = field(default=())
    protected_name: str = "s"

    def __post_init__(self):
        X = check_features(self.X)
        y = check_binary(self.y, "y")
        s = check_binary(self.s, "s")
        check_same_length(X=X, y=y, s=s)
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValidationError(f"{len(names)} feature names for {X.shape[1]} columns")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValidationError(f"duplicate feature names: {dupes}")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "s", _frozen(s))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx], self.s[idx], self.feature_names, self.protected_name)

    def with_labels(self, y) -> "Dataset":
        return Dataset(self.X, y, self.s, self.feature_names, self.protected_name)

    def drop_columns(self, names: Sequence[str]) -> "Dataset":
        drop = set(names)
        keep = [j for j, c in enumerate(self.feature_names) if c not in drop]
        return Dataset(
            self.X[:, keep],
            self.y,
            self.s,
            tuple(self.feature_names[j] for j in keep),
            self.protected_name,
        )


def validate_dataset(X, y=None, s=None, feature_names: Sequence[str] = ()) -> Dataset:
    """Build a :class:`Dataset`, raising :class:`ValidationError` naming the offending entry.

    An existing :class:`Dataset` is already valid and is returned unchanged.
    """
    if isinstance(X, Dataset):
        return X
    if y is None or s is None:
        raise ValidationError("y and s are required")
    return Dataset(X, y, s, tuple(feature_names))


def partition_groups(y, s) -> Groups:
    y = check_binary(y, "y")
    s = check_binary(s, "s")
    check_same_length(y=y, s=s)
    return Groups(
        d_pos=np.flatnonzero((s == 1) & (y == 1)),
        d_neg=np.flatnonzero((s == 1) & (y == 0)),
        a_pos=np.flatnonzero((s == 0) & (y == 1)),
        a_neg=np.flatnonzero((s == 0) & (y == 0)),
    )
