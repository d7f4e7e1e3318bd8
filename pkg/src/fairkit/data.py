"""German Credit loading and encoding, plus a generic CSV loader.

The UCI ``german.data`` file has one applicant per line with 21
whitespace-separated fields: 13 categorical codes (``A11`` .. ``A202``),
7 integers and the credit risk (1 = good, 2 = bad). A copy is bundled with
the package; :func:`fetch_german_credit` downloads and checks a fresh one.
"""

from __future__ import annotations

import csv
import hashlib
import urllib.request
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import ConfigError, Dataset, FairkitError, ValidationError, check_binary

GERMAN_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/german/german.data"
GERMAN_SHA256 = "b21f3d81db8071257d5ff1deaeba1fd4303b62712e6fcc9715c7a86202cb5871"
GERMAN_N_RECORDS = 1000


class DataError(FairkitError):
    pass


class ParseError(DataError):
    pass


class IntegrityError(DataError):
    pass


# (name, categories or None for integer columns), in file order
GERMAN_ATTRIBUTES: tuple[tuple[str, tuple[str, ...] | None], ...] = (
    ("checking_status", ("A11", "A12", "A13", "A14")),
    ("duration", None),
    ("credit_history", ("A30", "A31", "A32", "A33", "A34")),
    ("purpose", ("A40", "A41", "A42", "A43", "A44", "A45", "A46", "A47", "A48", "A49", "A410")),
    ("credit_amount", None),
    ("savings", ("A61", "A62", "A63", "A64", "A65")),
    ("employment", ("A71", "A72", "A73", "A74", "A75")),
    ("installment_rate", None),
    ("personal_status", ("A91", "A92", "A93", "A94", "A95")),
    ("other_debtors", ("A101", "A102", "A103")),
    ("residence_since", None),
    ("property", ("A121", "A122", "A123", "A124")),
    ("age", None),
    ("other_installment_plans", ("A141", "A142", "A143")),
    ("housing", ("A151", "A152", "A153")),
    ("existing_credits", None),
    ("job", ("A171", "A172", "A173", "A174")),
    ("num_dependents", None),
    ("telephone", ("A191", "A192")),
    ("foreign_worker", ("A201", "A202")),
)

PROTECTED_NAMES = ("female", "foreign_worker", "age_below_25")
FEMALE_CODES = frozenset({"A92", "A95"})
FOREIGN_WORKER_YES = "A201"
AGE_CUTOFF = 25

# encoded columns carrying each protected attribute
PROTECTED_SOURCE_COLUMNS = {
    "female": ("personal_status_A91", "personal_status_A92", "personal_status_A93",
               "personal_status_A94", "personal_status_A95", "is_female"),
    "foreign_worker": ("foreign_worker_A201", "foreign_worker_A202", "is_foreign_worker"),
    "age_below_25": ("age", "is_age_below_25"),
}
ALL_PROTECTED_COLUMNS = tuple(c for cols in PROTECTED_SOURCE_COLUMNS.values() for c in cols)


@dataclass(frozen=True)
class GermanCreditRecord:
    attributes: tuple  # 20 values: str codes or ints, in file order
    risk: int  # 1 = good, 2 = bad

    def __getitem__(self, name: str):
        return self.attributes[_ATTR_INDEX[name]]


_ATTR_INDEX = {name: i for i, (name, _) in enumerate(GERMAN_ATTRIBUTES)}


def german_credit_path() -> Path:
    """Path of the bundled ``german.data``."""
    return Path(str(resources.files("fairkit").joinpath("datasets/german.data")))


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def fetch_german_credit(dest, url: str = GERMAN_URL) -> Path:
    """Download ``german.data`` to ``dest`` and verify its pinned SHA-256."""
    dest = Path(dest)
    with urllib.request.urlopen(url, timeout=60) as resp:
        payload = resp.read()
    digest = hashlib.sha256(payload).hexdigest()
    if digest != GERMAN_SHA256:
        raise IntegrityError(f"downloaded file has SHA-256 {digest}, expected {GERMAN_SHA256}")
    dest.write_bytes(payload)
    return dest


def _parse_line(fields: list[str], lineno: int) -> GermanCreditRecord:
    if len(fields) != 21:
        raise ParseError(f"line {lineno}: expected 21 fields, got {len(fields)}")
    values = []
    for (name, categories), raw in zip(GERMAN_ATTRIBUTES, fields[:20]):
        if categories is None:
            try:
                values.append(int(raw))
            except ValueError:
                raise ParseError(f"line {lineno}: {name} = {raw!r} is not an integer") from None
        else:
            if raw not in categories:
                raise ParseError(f"line {lineno}: {name} = {raw!r} is not one of {', '.join(categories)}")
            values.append(raw)
    if fields[20] not in ("1", "2"):
        raise ParseError(f"line {lineno}: risk = {fields[20]!r} is not 1 or 2")
    return GermanCreditRecord(tuple(values), int(fields[20]))


def load_german_credit(path=None, expected_records: int | None = GERMAN_N_RECORDS) -> list[GermanCreditRecord]:
    path = german_credit_path() if path is None else Path(path)
    records = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            records.append(_parse_line(fields, lineno))
    if expected_records is not None and len(records) != expected_records:
        raise IntegrityError(f"{path}: expected {expected_records} records, found {len(records)}")
    return records


def protected_attribute(records, name: str) -> np.ndarray:
    """Binary protected attribute with the disadvantaged group coded 1.

    ``age_below_25`` counts applicants aged 25 or younger as disadvantaged.
    """
    if name == "female":
        return np.array([r["personal_status"] in FEMALE_CODES for r in records], dtype=np.int64)
    if name == "foreign_worker":
        return np.array([r["foreign_worker"] == FOREIGN_WORKER_YES for r in records], dtype=np.int64)
    if name == "age_below_25":
        return np.array([r["age"] <= AGE_CUTOFF for r in records], dtype=np.int64)
    raise ConfigError(f"unknown protected attribute {name!r}; choose from {', '.join(PROTECTED_NAMES)}")


def german_feature_names() -> tuple[str, ...]:
    names = []
    for name, categories in GERMAN_ATTRIBUTES:
        if categories is None:
            names.append(name)
        else:
            names.extend(f"{name}_{c}" for c in categories)
    names.extend(f"is_{p}" for p in PROTECTED_NAMES)
    return tuple(names)


NUMERIC_COLUMNS = tuple(name for name, cats in GERMAN_ATTRIBUTES if cats is None)


def encode_features(records) -> np.ndarray:
    """Raw design matrix: one-hot categoricals, integer columns as-is, protected indicators."""
    rows = []
    for r in records:
        row = []
        for (name, categories), v in zip(GERMAN_ATTRIBUTES, r.attributes):
            if categories is None:
                row.append(float(v))
            else:
                row.extend(1.0 if v == c else 0.0 for c in categories)
        rows.append(row)
    X = np.array(rows, dtype=float)
    indicators = np.column_stack([protected_attribute(records, p) for p in PROTECTED_NAMES])
    return np.hstack([X, indicators.astype(float)])


class Standardizer:
    """Z-score selected columns with statistics from the data passed to :meth:`fit`."""

    def __init__(self, columns):
        self.columns = tuple(columns)

    def fit(self, X, feature_names):
        idx = [feature_names.index(c) for c in self.columns if c in feature_names]
        X = np.asarray(X, dtype=float)
        self.index_ = np.array(idx, dtype=np.int64)
        self.mean_ = X[:, self.index_].mean(axis=0)
        std = X[:, self.index_].std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        return self

    def transform(self, X) -> np.ndarray:
        X = np.array(X, dtype=float, copy=True)
        X[:, self.index_] = (X[:, self.index_] - self.mean_) / self.scale_
        return X

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "index": self.index_.tolist(),
            "mean": self.mean_.tolist(),
            "scale": self.scale_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        self = cls(d["columns"])
        self.index_ = np.array(d["index"], dtype=np.int64)
        self.mean_ = np.array(d["mean"], dtype=float)
        self.scale_ = np.array(d["scale"], dtype=float)
        return self


def encode(records, protected_name: str, standardize: bool = True, drop_protected: bool = False) -> Dataset:
    """Encode records as a :class:`Dataset` with ``y = 1`` for good credit risk.

    Numeric columns are z-scored over ``records`` when ``standardize`` is true
    (cross-validation passes ``False`` and standardizes per training fold).
    ``drop_protected`` removes every protected-source column.
    """
    s = protected_attribute(records, protected_name)
    y = np.array([1 if r.risk == 1 else 0 for r in records], dtype=np.int64)
    names = german_feature_names()
    X = encode_features(records)
    if standardize:
        X = Standardizer(NUMERIC_COLUMNS).fit(X, list(names)).transform(X)
    data = Dataset(X, y, s, names, protected_name)
    if drop_protected:
        data = data.drop_columns(ALL_PROTECTED_COLUMNS)
    return data


def load_csv_dataset(
    path, target: str, protected: str, drop: tuple[str, ...] = (), include_protected: bool = False
) -> Dataset:
    """Load a numeric CSV with a header row.

    ``target`` and ``protected`` name 0/1 columns; every other column not listed
    in ``drop`` becomes a feature. ``include_protected`` also keeps the
    protected column among the features.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path} line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ParseError(f"{path} line {lineno}: {exc}") from None
    for col in (target, protected):
        if col not in header:
            raise ConfigError(f"{path}: column {col!r} not found")
    if not rows:
        raise ParseError(f"{path}: no data rows")
    values = np.array(rows, dtype=float)
    excluded = {target, *drop} if include_protected else {target, protected, *drop}
    features = [c for c in header if c not in excluded]
    cols = [header.index(c) for c in features]
    try:
        y = check_binary(values[:, header.index(target)], target)
        s = check_binary(values[:, header.index(protected)], protected)
    except ValidationError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return Dataset(values[:, cols], y, s, tuple(features), protected)
