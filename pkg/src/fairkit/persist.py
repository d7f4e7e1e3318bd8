"""Versioned, human-readable JSON serialization of fitted models.

File layout::

    {
      "format": "fairkit-model",
      "version": 1,
      "sha256": "<hex digest of the canonical JSON of payload>",
      "payload": {...}
    }

``payload`` holds the fitted model under ``"model"`` (a tree of dicts keyed by
``"kind"``) plus whatever metadata the caller attached.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .core import FairkitError
from .estimators.acf import LinearACFClassifier
from .estimators.logistic import LogisticRegression
from .estimators.prejudice import PrejudiceRemover
from .estimators.tree import _TREE_ARRAYS, DecisionTree, RandomForest
from .postprocess import DiscriminationAwareEnsemble, RejectOptionClassifier

FORMAT = "fairkit-model"
VERSION = 1


class ModelFormatError(FairkitError):
    pass


def _tree_state(tree: DecisionTree) -> dict:
    d = {"kind": "tree", "params": tree.get_params(), "n_features": tree.n_features_}
    for name in _TREE_ARRAYS:
        d[name] = getattr(tree, name + "_").tolist()
    return d


def _load_tree(d: dict) -> DecisionTree:
    tree = DecisionTree(**d["params"])
    tree.n_features_ = int(d["n_features"])
    for name in _TREE_ARRAYS:
        dtype = float if name in ("threshold", "value", "impurity") else np.int64
        setattr(tree, name + "_", np.array(d[name], dtype=dtype))
    return tree


def model_to_dict(model) -> dict:
    kind = getattr(model, "kind", None)
    if kind in ("logistic", "prr"):
        return {
            "kind": kind,
            "params": model.get_params(),
            "coef": model.coef_.tolist(),
            "intercept": model.intercept_,
            "fit_meta": model.fit_meta_,
        }
    if kind == "tree":
        return _tree_state(model)
    if kind == "forest":
        return {
            "kind": "forest",
            "params": model.get_params(),
            "n_features": model.n_features_,
            "trees": [_tree_state(t) for t in model.trees_],
        }
    if kind == "acf":
        return {
            "kind": "acf",
            "feature_kinds": list(model.feature_kinds_),
            "residualizer_params": model.residualizer_params_.tolist(),
            "estimator": model_to_dict(model.estimator),
        }
    if kind == "roc":
        return {
            "kind": "roc",
            "theta": model.theta,
            "weights": model.weights,
            "estimators": [model_to_dict(e) for e in model.estimators],
        }
    if kind == "daec":
        return {"kind": "daec", "estimators": [model_to_dict(e) for e in model.estimators]}
    raise ModelFormatError(f"cannot serialize model of type {type(model).__name__}")


def model_from_dict(d: dict):
    try:
        kind = d["kind"]
        if kind in ("logistic", "prr"):
            cls = LogisticRegression if kind == "logistic" else PrejudiceRemover
            model = cls(**d["params"])
            model.coef_ = np.array(d["coef"], dtype=float)
            model.intercept_ = float(d["intercept"])
            model.fit_meta_ = dict(d["fit_meta"])
            return model
        if kind == "tree":
            return _load_tree(d)
        if kind == "forest":
            model = RandomForest(**d["params"])
            model.n_features_ = int(d["n_features"])
            model.trees_ = [_load_tree(t) for t in d["trees"]]
            return model
        if kind == "acf":
            model = LinearACFClassifier(model_from_dict(d["estimator"]), d["feature_kinds"])
            model.feature_kinds_ = list(d["feature_kinds"])
            model.residualizer_params_ = np.array(d["residualizer_params"], dtype=float)
            return model
        if kind == "roc":
            return RejectOptionClassifier([model_from_dict(e) for e in d["estimators"]], d["theta"], d["weights"])
        if kind == "daec":
            return DiscriminationAwareEnsemble([model_from_dict(e) for e in d["estimators"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model entry: {exc!r}") from None
    raise ModelFormatError(f"unknown model kind {kind!r}")


def _digest(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def save_model(path, model, **metadata) -> Path:
    payload = {"model": model_to_dict(model), **metadata}
    doc = {"format": FORMAT, "version": VERSION, "sha256": _digest(payload), "payload": payload}
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def load_model(path):
    """Return ``(model, payload)``; raises :class:`ModelFormatError` on any mismatch."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFormatError(f"{path} is not a {FORMAT} file")
    if doc.get("version") != VERSION:
        raise ModelFormatError(f"{path} has format version {doc.get('version')!r}, this build reads version {VERSION}")
    payload = doc.get("payload")
    if not isinstance(payload, dict) or doc.get("sha256") != _digest(payload):
        raise ModelFormatError(f"{path} failed its checksum; the file was modified or truncated")
    return model_from_dict(payload["model"]), payload
