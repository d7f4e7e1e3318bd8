"""Command-line interface.

Subcommands: ``audit``, ``train``, ``predict``, ``experiment``, ``report``.

Every subcommand accepts ``--config FILE``, an INI-style file whose
``[fairkit]`` section holds ``key = value`` pairs named like the long flags
(``n-estimators = 50`` or ``n_estimators = 50``). Flags on the command line
win over file values.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import ConfigError, Dataset, FairkitError, ValidationError
from .data import (
    ALL_PROTECTED_COLUMNS,
    NUMERIC_COLUMNS,
    PROTECTED_NAMES,
    DataError,
    Standardizer,
    encode,
    german_credit_path,
    load_csv_dataset,
    load_german_credit,
    sha256_file,
)
from .metrics import (
    DEFAULT_K,
    UndefinedMetricError,
    consistency,
    mean_difference,
    normalized_mean_difference,
    situation_test_score,
)
from .model_selection import (
    ALL_CONDITIONS,
    MODEL_TYPES,
    PAPER_CONDITIONS,
    ExperimentConfig,
    ExperimentReport,
    dicts_to_csv,
    fairness_utility_correlation,
    fit_condition,
    plot_data,
    predict_with,
    rows_from_csv,
    run_experiment,
)
from .persist import ModelFormatError, load_model, save_model

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

SUMMARY_FIELDS = ("condition", "model", "protected", "split", "folds", "auc", "mean_difference")
CORRELATION_FIELDS = ("condition", "protected", "n", "r", "ci_low", "ci_high", "defined")
FAILURE_FIELDS = ("condition", "model", "protected", "fold", "error")
AUDIT_FIELDS = ("protected", "metric", "value", "ci_low", "ci_high")
PLOT_FIELDS = ("condition", "model", "protected", "fold", "split", "metric", "value")
STOCHASTIC_CONDITIONS = ("US", "PS")


class UsageError(FairkitError):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(value: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _optional_int(value: str):
    return None if value.lower() in ("none", "") else int(value)


# ---------------------------------------------------------------- data input


def _add_dataset_args(p):
    p.add_argument("--dataset", type=Path, help="input file (default: bundled German Credit data)")
    p.add_argument("--format", choices=("german", "csv"), default="german", help="input file layout")
    p.add_argument("--target", default="y", help="CSV only: 0/1 target column")
    p.add_argument("--protected-column", default="s", help="CSV only: 0/1 protected column (1 = disadvantaged)")


def _dataset_path(args) -> Path:
    return args.dataset if args.dataset is not None else german_credit_path()


def _load_datasets(args, protected_names, standardize: bool) -> dict[str, Dataset]:
    path = _dataset_path(args)
    if args.format == "german":
        records = load_german_credit(path)
        return {name: encode(records, name, standardize=standardize) for name in protected_names}
    data = load_csv_dataset(path, args.target, args.protected_column, include_protected=True)
    if standardize:
        std = Standardizer(_csv_numeric_columns(data)).fit(data.X, list(data.feature_names))
        data = Dataset(std.transform(data.X), data.y, data.s, data.feature_names, data.protected_name)
    return {data.protected_name: data}


def _csv_numeric_columns(data: Dataset) -> tuple[str, ...]:
    return tuple(
        name for j, name in enumerate(data.feature_names) if not np.isin(data.X[:, j], (0.0, 1.0)).all()
    )


def _protected_columns(args, data: Dataset) -> tuple[str, ...]:
    return ALL_PROTECTED_COLUMNS if args.format == "german" else (data.protected_name,)


def _numeric_columns(args, data: Dataset) -> tuple[str, ...]:
    return NUMERIC_COLUMNS if args.format == "german" else _csv_numeric_columns(data)


def _protected_list(args) -> tuple[str, ...]:
    if args.format == "csv":
        return (args.protected_column,)
    names = args.protected
    unknown = set(names) - set(PROTECTED_NAMES)
    if unknown:
        raise UsageError(f"unknown protected attribute(s) {sorted(unknown)}; choose from {', '.join(PROTECTED_NAMES)}")
    return names


def _write(text: str, output: Path | None):
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _format_table(rows: list[dict], fields) -> str:
    from .model_selection import format_value

    cells = [[str(f) for f in fields]] + [[format_value(r.get(f)) or "-" for f in fields] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(fields))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells) + "\n"


# --------------------------------------------------------------------- audit


def _metric_entry(protected, name, fn):
    try:
        r = fn()
    except UndefinedMetricError:
        return {"protected": protected, "metric": name, "value": None, "ci_low": None, "ci_high": None}
    if isinstance(r, float):
        return {"protected": protected, "metric": name, "value": r, "ci_low": None, "ci_high": None}
    return {"protected": protected, "metric": name, "value": r.value, "ci_low": r.ci_low, "ci_high": r.ci_high}


def cmd_audit(args) -> int:
    protected = _protected_list(args)
    datasets = _load_datasets(args, protected, standardize=True)
    results = []
    for name in protected:
        data = datasets[name]
        knn_data = data.drop_columns(_protected_columns(args, data))
        results += [
            _metric_entry(name, "mean_difference", lambda: mean_difference(data.y, data.s)),
            _metric_entry(name, "normalized_mean_difference", lambda: normalized_mean_difference(data.y, data.s)),
            _metric_entry(name, "consistency", lambda: consistency(knn_data.X, data.y, args.k)),
            _metric_entry(name, "situation_test_score", lambda: situation_test_score(knn_data.X, data.y, data.s, args.k)),
        ]
    if args.output_format == "csv":
        text = dicts_to_csv(results, AUDIT_FIELDS)
    else:
        path = _dataset_path(args)
        doc = {"dataset": path.name, "sha256": sha256_file(path), "k": args.k, "results": results}
        text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    _write(text, args.output)
    return EXIT_OK


# --------------------------------------------------------------- train/predict


def _hyperparams(args) -> ExperimentConfig:
    return ExperimentConfig(
        seed=args.seed if args.seed is not None else 0,
        theta=args.theta,
        eta=args.eta,
        l2_lambda=args.l2,
        n_estimators=args.n_estimators,
        max_depth=args.max_depth,
        min_samples_leaf=args.min_samples_leaf,
    ).validate()


def cmd_train(args) -> int:
    if args.seed is None and (args.model == "forest" or args.condition in STOCHASTIC_CONDITIONS):
        raise UsageError(f"--seed is required for model {args.model!r} with condition {args.condition!r}")
    if args.format == "german":
        if args.protected not in PROTECTED_NAMES:
            raise UsageError(f"unknown protected attribute {args.protected!r}; choose from {', '.join(PROTECTED_NAMES)}")
        data = encode(load_german_credit(_dataset_path(args)), args.protected, standardize=False)
    else:
        data = load_csv_dataset(_dataset_path(args), args.target, args.protected_column, include_protected=True)
    numeric = _numeric_columns(args, data)
    if args.condition == "RPA":
        data = data.drop_columns(_protected_columns(args, data))
    std = Standardizer(numeric).fit(data.X, list(data.feature_names))
    train = Dataset(std.transform(data.X), data.y, data.s, data.feature_names, data.protected_name)
    config = _hyperparams(args)
    model = fit_condition(args.condition, args.model, train, config, config.seed)
    save_model(
        args.output,
        model,
        condition=args.condition,
        model_type=args.model,
        feature_names=list(train.feature_names),
        standardizer=std.to_dict(),
        protected_name=data.protected_name,
        input_format=args.format,
        target=args.target,
        hyperparameters=config.to_dict(),
    )
    return EXIT_OK


def _prediction_inputs(args, payload):
    names = payload["feature_names"]
    protected = payload["protected_name"]
    path = _dataset_path(args)
    if args.format == "german":
        data = encode(load_german_credit(path), protected, standardize=False)
        columns = list(data.feature_names)
        missing = [c for c in names if c not in columns]
        if missing:
            raise ValidationError(f"input lacks model features {missing}")
        return data.X[:, [columns.index(c) for c in names]], data.s
    import csv

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if protected not in header and protected in names:
        raise ValidationError(f"missing input: {path} lacks protected column {protected!r} required by the model")
    missing = [c for c in names if c not in header]
    if missing:
        raise ValidationError(f"{path}: missing feature columns {missing}")
    try:
        values = np.array([[float(v) for v in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    X = values[:, [header.index(c) for c in names]]
    s = values[:, header.index(protected)].astype(np.int64) if protected in header else None
    return X, s


def cmd_predict(args) -> int:
    model, payload = load_model(args.model)
    X, s = _prediction_inputs(args, payload)
    X = Standardizer.from_dict(payload["standardizer"]).transform(X)
    try:
        labels, scores = predict_with(model, X, s)
    except ValidationError as exc:
        if s is None:
            raise ValidationError(
                f"missing input: model requires protected column {payload['protected_name']!r} to predict"
            ) from exc
        raise
    rows = [{"row": i, "label": int(l), "score": float(p)} for i, (l, p) in enumerate(zip(labels, scores))]
    _write(dicts_to_csv(rows, ("row", "label", "score")), args.output)
    return EXIT_OK


# ---------------------------------------------------------------- experiment


def _write_report_tables(report: ExperimentReport, outdir: Path):
    (outdir / "summary.csv").write_text(dicts_to_csv(report.summary(), SUMMARY_FIELDS))
    (outdir / "correlation.csv").write_text(dicts_to_csv(fairness_utility_correlation(report), CORRELATION_FIELDS))


def _print_report(report: ExperimentReport):
    test = [r for r in report.summary() if r["split"] == "test"]
    sys.stdout.write("Mean over folds (test split)\n")
    sys.stdout.write(_format_table(test, SUMMARY_FIELDS))
    sys.stdout.write("\nPearson r between AUC and mean difference (test split, 95% CI)\n")
    sys.stdout.write(_format_table(fairness_utility_correlation(report), CORRELATION_FIELDS))


def cmd_experiment(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required for experiment")
    protected = _protected_list(args)
    config = ExperimentConfig(
        conditions=args.conditions,
        model_types=args.models,
        protected_names=protected,
        folds=args.folds,
        seed=args.seed,
        theta=args.theta,
        eta=args.eta,
        l2_lambda=args.l2,
        n_estimators=args.n_estimators,
        max_depth=args.max_depth,
        min_samples_leaf=args.min_samples_leaf,
        jobs=args.jobs,
    ).validate()
    datasets = _load_datasets(args, protected, standardize=False)
    first = next(iter(datasets.values()))
    report = run_experiment(datasets, config, _numeric_columns(args, first), _protected_columns(args, first))
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "rows.csv").write_text(report.to_csv())
    (outdir / "rows.json").write_text(report.to_json())
    (outdir / "failures.csv").write_text(dicts_to_csv(report.failures, FAILURE_FIELDS))
    _write_report_tables(report, outdir)
    if args.emit_plot_data:
        (outdir / "plot_data.csv").write_text(dicts_to_csv(plot_data(report), PLOT_FIELDS))
    _print_report(report)
    if report.failures:
        sys.stderr.write(f"{len(report.failures)} fold(s) failed; see {outdir / 'failures.csv'}\n")
    return EXIT_OK if report.rows else EXIT_DATA


def cmd_report(args) -> int:
    report = ExperimentReport(rows_from_csv(Path(args.input).read_text()))
    if args.output is not None:
        outdir = Path(args.output)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_report_tables(report, outdir)
        if args.emit_plot_data:
            (outdir / "plot_data.csv").write_text(dicts_to_csv(plot_data(report), PLOT_FIELDS))
    else:
        _print_report(report)
    return EXIT_OK


# ------------------------------------------------------------------- parsing


def _add_model_args(p):
    p.add_argument("--l2", type=float, default=1.0, help="L2 penalty for logistic models")
    p.add_argument("--eta", type=float, default=1.0, help="prejudice-index weight for PRR")
    p.add_argument("--theta", type=float, default=0.6, help="reject-option critical region threshold in (0.5, 1)")
    p.add_argument("--n-estimators", type=int, default=100)
    p.add_argument("--max-depth", type=_optional_int, default=None)
    p.add_argument("--min-samples-leaf", type=int, default=1)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="fairkit", description="Audit, train and compare fairness-aware binary classifiers.")
    parser.add_argument("--version", action="version", version=f"fairkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("audit", help="discrimination metrics of the dataset labels")
    _add_dataset_args(p)
    p.add_argument("--protected", type=_csv_list, default=PROTECTED_NAMES)
    p.add_argument("--k", type=int, default=DEFAULT_K, help="neighbors for individual-level metrics")
    p.add_argument("--output", type=Path)
    p.add_argument("--output-format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("train", help="fit one model and write it to a model file")
    _add_dataset_args(p)
    p.add_argument("--protected", default="female")
    p.add_argument("--model", choices=MODEL_TYPES, default="logistic")
    p.add_argument("--condition", choices=ALL_CONDITIONS, default="B")
    p.add_argument("--seed", type=int)
    _add_model_args(p)
    p.add_argument("--output", type=Path, required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels and scores with a model file")
    _add_dataset_args(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--output", type=Path)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("experiment", help="cross-validated condition x model x protected grid")
    _add_dataset_args(p)
    p.add_argument("--conditions", type=_csv_list, default=PAPER_CONDITIONS)
    p.add_argument("--models", type=_csv_list, default=MODEL_TYPES)
    p.add_argument("--protected", type=_csv_list, default=PROTECTED_NAMES)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    _add_model_args(p)
    p.add_argument("--output", type=Path, required=True, help="output directory")
    p.add_argument("--emit-plot-data", action="store_true", help="also write long-format plot_data.csv")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="summaries and correlations recomputed from rows.csv")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, help="output directory (default: print tables)")
    p.add_argument("--emit-plot-data", action="store_true")
    p.set_defaults(func=cmd_report)

    for action in sub.choices.values():
        action.add_argument("--config", type=Path, help="INI file with a [fairkit] section of flag defaults")
    return parser


def _apply_config(parser: ArgumentParser, argv: list[str]):
    """Load ``--config`` values as subparser defaults; unknown keys are usage errors."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    cfg = configparser.ConfigParser()
    try:
        with open(known.config) as fh:
            cfg.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config file {known.config}: {exc}") from None
    if not cfg.has_section("fairkit"):
        raise UsageError(f"config file {known.config} has no [fairkit] section")
    command = next((a for a in argv if a in parser._subparsers._group_actions[0].choices), None)
    if command is None:
        return
    subparser = parser._subparsers._group_actions[0].choices[command]
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, raw in cfg.items("fairkit"):
        dest = key.replace("-", "_")
        if dest not in actions:
            raise UsageError(f"config file {known.config}: unknown key {key!r} for {command}")
        action = actions[dest]
        try:
            if isinstance(action, argparse._StoreTrueAction):
                defaults[dest] = cfg.getboolean("fairkit", key)
                continue
            value = action.type(raw) if action.type else raw
        except ValueError as exc:
            raise UsageError(f"config file {known.config}: bad value for {key}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config file {known.config}: {key} must be one of {list(action.choices)}")
        defaults[dest] = value
        action.required = False
    subparser.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"fairkit: error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        sys.stderr.write(f"fairkit: error: {exc}\n")
        return EXIT_USAGE
    except (DataError, ModelFormatError, ValidationError, UndefinedMetricError, FairkitError, OSError) as exc:
        sys.stderr.write(f"fairkit: error: {exc}\n")
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"fairkit: internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
