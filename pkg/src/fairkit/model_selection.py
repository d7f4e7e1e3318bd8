"""Cross-validation and the condition-by-model experiment grid.

Conditions:

* ``B``    baseline, all features including the protected ones
* ``RPA``  protected-source columns removed
* ``RTV``  training labels relabelled (logistic-regression ranker)
* ``CFM``  additive counterfactually fair model around the base learner
* ``ROC``  reject-option classification around the base learner

Extra conditions outside the reproduction grid: ``RW`` (reweighing), ``US``
(uniform sampling), ``PS`` (preferential sampling), ``PRR`` (prejudice
remover, logistic only) and ``DAEC`` (base learner paired with a second model
type in a discrimination-aware ensemble).
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from .core import ConfigError, Dataset, FairkitError, ValidationError, check_binary, check_same_length
from .estimators import (
    ConvergenceWarning,
    DecisionTree,
    LinearACFClassifier,
    LogisticRegression,
    PrejudiceRemover,
    RandomForest,
)
from .metrics import UndefinedMetricError, auc, mean_difference, pearson_r_with_ci
from .postprocess import DiscriminationAwareEnsemble, RejectOptionClassifier
from .preprocess import preferential_sample, relabel, reweigh, uniform_sample

PAPER_CONDITIONS = ("B", "RPA", "RTV", "CFM", "ROC")
EXTRA_CONDITIONS = ("RW", "US", "PS", "PRR", "DAEC")
ALL_CONDITIONS = PAPER_CONDITIONS + EXTRA_CONDITIONS
MODEL_TYPES = ("logistic", "tree", "forest")
SPLITS = ("train", "test")
ROW_FIELDS = ("condition", "model", "protected", "fold", "split", "auc", "mean_difference")
FLOAT_DECIMALS = 6

# models that need the protected attribute at prediction time
S_AWARE_KINDS = ("acf", "roc", "daec")


@dataclass
class ExperimentConfig:
    conditions: tuple[str, ...] = PAPER_CONDITIONS
    model_types: tuple[str, ...] = MODEL_TYPES
    protected_names: tuple[str, ...] = ("female", "foreign_worker", "age_below_25")
    folds: int = 10
    seed: int = 0
    theta: float = 0.6
    eta: float = 1.0
    l2_lambda: float = 1.0
    n_estimators: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    jobs: int = 1

    def validate(self) -> "ExperimentConfig":
        for name in ("conditions", "model_types", "protected_names"):
            setattr(self, name, tuple(getattr(self, name)))
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        unknown = set(self.conditions) - set(ALL_CONDITIONS)
        if unknown:
            raise ConfigError(f"unknown conditions {sorted(unknown)}; choose from {', '.join(ALL_CONDITIONS)}")
        unknown = set(self.model_types) - set(MODEL_TYPES)
        if unknown:
            raise ConfigError(f"unknown model types {sorted(unknown)}; choose from {', '.join(MODEL_TYPES)}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if not 0.5 < self.theta < 1:
            raise ConfigError(f"theta must lie in (0.5, 1), got {self.theta}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def _strata(y, s, k):
    cells = y * 2 + s
    counts = np.bincount(cells, minlength=4)
    small = [f"(y={c // 2}, s={c % 2}): {counts[c]}" for c in range(4) if 0 < counts[c] < k]
    if small:
        return cells, f"stratified on (y, s); cells smaller than k={k} leave some folds without them: " + ", ".join(small)
    return cells, "stratified on (y, s)"


def stratified_kfold(y, s, k: int, seed: int, return_note: bool = False):
    """Split row indices into ``k`` (train, test) pairs preserving (y, s) proportions.

    Rows of each stratum are shuffled with ``seed`` and dealt to folds in turn,
    continuing the rotation across strata so fold sizes differ by at most one.
    Dealing keeps every cell within one row of its proportional share even when
    a cell is smaller than ``k``, so no coarser fallback stratification is used.
    """
    y = check_binary(y, "y")
    s = check_binary(s, "s")
    n = check_same_length(y=y, s=s)
    if not 2 <= k <= n:
        raise ValidationError(f"k must satisfy 2 <= k <= n, got k={k}, n={n}")
    strata, note = _strata(y, s, k)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    offset = 0
    for value in np.unique(strata):
        rows = rng.permutation(np.flatnonzero(strata == value))
        fold_of[rows] = (offset + np.arange(len(rows))) % k
        offset += len(rows)
    splits = [(np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)) for f in range(k)]
    return (splits, note) if return_note else splits


def cell_seed(seed: int, model_type: str, protected: str, fold: int) -> int:
    """Seed shared by all conditions of one (model, protected, fold) cell."""
    key = [MODEL_TYPES.index(model_type), zlib.crc32(protected.encode()), fold]
    return int(np.random.SeedSequence([seed, *key]).generate_state(1)[0])


def make_model(model_type: str, config: ExperimentConfig, seed: int = 0):
    if model_type == "logistic":
        return LogisticRegression(config.l2_lambda)
    if model_type == "tree":
        return DecisionTree(config.max_depth, config.min_samples_leaf)
    if model_type == "forest":
        return RandomForest(config.n_estimators, config.max_depth, config.min_samples_leaf, seed)
    raise ConfigError(f"unknown model type {model_type!r}")


class IncompatibleConditionError(FairkitError):
    pass


def fit_condition(condition: str, model_type: str, train: Dataset, config: ExperimentConfig, seed: int = 0):
    """Fit a model on ``train`` following the recipe of ``condition``.

    ``RPA`` expects the caller to have already dropped the protected columns.
    """
    model = make_model(model_type, config, seed)
    X, y, s = train.X, train.y, train.s
    if condition in ("B", "RPA"):
        return model.fit(X, y)
    if condition == "RTV":
        ranker = partial(LogisticRegression, config.l2_lambda)
        new_y, _ = relabel(train, ranker=ranker)
        return model.fit(X, new_y)
    if condition == "CFM":
        return LinearACFClassifier(model).fit(X, y, s)
    if condition == "ROC":
        return RejectOptionClassifier([model], config.theta).fit(X, y)
    if condition == "RW":
        return model.fit(X, y, sample_weight=reweigh(y, s))
    if condition == "US":
        sampled = uniform_sample(train, rng_seed=seed)
        return model.fit(sampled.X, sampled.y)
    if condition == "PS":
        sampled = preferential_sample(train, partial(LogisticRegression, config.l2_lambda), rng_seed=seed)
        return model.fit(sampled.X, sampled.y)
    if condition == "PRR":
        if model_type != "logistic":
            raise IncompatibleConditionError("PRR is defined for logistic regression only")
        return PrejudiceRemover(config.eta, config.l2_lambda).fit(X, y, s)
    if condition == "DAEC":
        partner = make_model("tree" if model_type == "logistic" else "logistic", config, seed)
        return DiscriminationAwareEnsemble([model, partner]).fit(X, y)
    raise ConfigError(f"unknown condition {condition!r}")


def predict_with(model, X, s=None):
    """Return ``(labels, scores)`` for any fitted model of this package."""
    if getattr(model, "kind", None) in S_AWARE_KINDS:
        if s is None:
            raise ValidationError(f"a {model.kind} model needs the protected attribute to predict")
        return model.predict(X, s), model.predict_proba(X, s)
    scores = model.predict_proba(X)
    return (scores >= 0.5).astype(np.int64), scores


def _round(v: float) -> float:
    return float(f"{v:.{FLOAT_DECIMALS}f}")


def _prepare_fold(data, train_idx, test_idx, condition, numeric_columns, protected_columns):
    from .data import Standardizer

    train, test = data.subset(train_idx), data.subset(test_idx)
    std = Standardizer(numeric_columns).fit(train.X, list(data.feature_names))
    train = Dataset(std.transform(train.X), train.y, train.s, data.feature_names, data.protected_name)
    test = Dataset(std.transform(test.X), test.y, test.s, data.feature_names, data.protected_name)
    if condition == "RPA":
        train, test = train.drop_columns(protected_columns), test.drop_columns(protected_columns)
    return train, test


def run_condition(
    condition: str,
    model_type: str,
    data: Dataset,
    splits,
    config: ExperimentConfig,
    numeric_columns=(),
    protected_columns=(),
):
    """Fit and score one (condition, model, protected) cell on every fold.

    Returns ``(rows, failures)``; a fold whose fit or scoring fails is recorded
    in ``failures`` and skipped.
    """
    rows, failures = [], []
    for fold, (train_idx, test_idx) in enumerate(splits):
        if np.intersect1d(train_idx, test_idx).size:
            raise ValidationError(f"fold {fold}: training and test rows overlap")
        train, test = _prepare_fold(data, train_idx, test_idx, condition, numeric_columns, protected_columns)
        seed = cell_seed(config.seed, model_type, data.protected_name, fold)
        key = {"condition": condition, "model": model_type, "protected": data.protected_name, "fold": fold}
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                model = fit_condition(condition, model_type, train, config, seed)
            fold_rows = []
            for split, part in zip(SPLITS, (train, test)):
                labels, scores = predict_with(model, part.X, part.s)
                fold_rows.append(
                    {
                        **key,
                        "split": split,
                        "auc": _round(auc(part.y, scores)),
                        "mean_difference": _round(mean_difference(labels, part.s).value),
                    }
                )
        except (FairkitError, ValueError) as exc:
            failures.append({**key, "error": f"{type(exc).__name__}: {exc}"})
            continue
        rows.extend(fold_rows)
    return rows, failures


def _row_key(row):
    return (
        ALL_CONDITIONS.index(row["condition"]),
        MODEL_TYPES.index(row["model"]),
        row["protected"],
        int(row["fold"]),
        SPLITS.index(row["split"]),
    )


@dataclass
class ExperimentReport:
    rows: list[dict]
    failures: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=_row_key)
        self.failures = sorted(self.failures, key=lambda f: (*_row_key({**f, "split": "train"})[:4], f["error"]))

    def summary(self) -> list[dict]:
        """Mean AUC and mean difference over folds per (condition, model, protected, split)."""
        groups: dict[tuple, list[dict]] = {}
        for row in self.rows:
            groups.setdefault((row["condition"], row["model"], row["protected"], row["split"]), []).append(row)
        out = []
        for (condition, model, protected, split), rows in groups.items():
            out.append(
                {
                    "condition": condition,
                    "model": model,
                    "protected": protected,
                    "split": split,
                    "folds": len(rows),
                    "auc": _round(math.fsum(r["auc"] for r in rows) / len(rows)),
                    "mean_difference": _round(math.fsum(r["mean_difference"] for r in rows) / len(rows)),
                }
            )
        return out

    def mean(self, condition, model, protected, split="test", metric="mean_difference") -> float:
        for row in self.summary():
            if (row["condition"], row["model"], row["protected"], row["split"]) == (condition, model, protected, split):
                return row[metric]
        raise KeyError((condition, model, protected, split))

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)

    def to_json(self) -> str:
        doc = {
            "config": self.config,
            "rows": self.rows,
            "summary": self.summary(),
            "correlation": fairness_utility_correlation(self),
            "failures": self.failures,
            "notes": self.notes,
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.{FLOAT_DECIMALS}f}"
    return str(v)


def dicts_to_csv(rows: list[dict], fields) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([format_value(row.get(f)) for f in fields])
    return buf.getvalue()


def rows_to_csv(rows) -> str:
    return dicts_to_csv(rows, ROW_FIELDS)


def rows_from_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != ROW_FIELDS:
        raise ValidationError(f"report header must be {','.join(ROW_FIELDS)}, got {reader.fieldnames}")
    return [
        {
            **r,
            "fold": int(r["fold"]),
            "auc": float(r["auc"]),
            "mean_difference": float(r["mean_difference"]),
        }
        for r in reader
    ]


def fairness_utility_correlation(report: ExperimentReport, split: str = "test") -> list[dict]:
    """Pearson r between AUC and mean difference per (condition, protected).

    Points are every (model type, fold) pair of the cell. Cells with fewer than
    four points or a constant metric get ``defined = False`` and empty values.
    """
    cells: dict[tuple, list[dict]] = {}
    for row in report.rows:
        if row["split"] == split:
            cells.setdefault((row["condition"], row["protected"]), []).append(row)
    out = []
    for (condition, protected), rows in cells.items():
        entry = {"condition": condition, "protected": protected, "n": len(rows)}
        try:
            r = pearson_r_with_ci([x["auc"] for x in rows], [x["mean_difference"] for x in rows])
            entry.update(r=_round(r.value), ci_low=_round(r.ci_low), ci_high=_round(r.ci_high), defined=True)
        except UndefinedMetricError:
            entry.update(r=None, ci_low=None, ci_high=None, defined=False)
        out.append(entry)
    return out


def plot_data(report: ExperimentReport) -> list[dict]:
    """Long format (one metric value per row) for external plotting."""
    return [
        {**{k: row[k] for k in ROW_FIELDS[:5]}, "metric": metric, "value": row[metric]}
        for row in report.rows
        for metric in ("auc", "mean_difference")
    ]


def _run_cell(args):
    condition, model_type, data, splits, config, numeric_columns, protected_columns = args
    return run_condition(condition, model_type, data, splits, config, numeric_columns, protected_columns)


def run_experiment(
    datasets: dict[str, Dataset],
    config: ExperimentConfig,
    numeric_columns=(),
    protected_columns=(),
) -> ExperimentReport:
    """Run every (condition, model, protected) cell of the grid.

    ``datasets`` maps each protected name to its unstandardized dataset;
    ``numeric_columns`` are z-scored per training fold and ``protected_columns``
    are dropped under ``RPA``.
    """
    config.validate()
    notes = []
    tasks = []
    for protected in config.protected_names:
        if protected not in datasets:
            raise ConfigError(f"no dataset for protected attribute {protected!r}")
        data = datasets[protected]
        splits, note = stratified_kfold(data.y, data.s, config.folds, config.seed, return_note=True)
        notes.append(f"{protected}: {note}")
        for condition in config.conditions:
            for model_type in config.model_types:
                tasks.append((condition, model_type, data, splits, config, tuple(numeric_columns), tuple(protected_columns)))
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]
    rows = [r for res in results for r in res[0]]
    failures = [f for res in results for f in res[1]]
    return ExperimentReport(rows, failures, notes, config.to_dict())
