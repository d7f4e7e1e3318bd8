"""Baseline learners and fairness-aware estimators."""

from .acf import LinearACFClassifier, fit_linear_acf, infer_feature_kinds, predict_acf
from .logistic import ConvergenceWarning, LogisticRegression, fit_logistic
from .prejudice import PrejudiceRemover, fit_prejudice_remover, prejudice_index
from .tree import DecisionTree, RandomForest, fit_forest, fit_tree

__all__ = [
    "ConvergenceWarning",
    "DecisionTree",
    "LinearACFClassifier",
    "LogisticRegression",
    "PrejudiceRemover",
    "RandomForest",
    "fit_forest",
    "fit_linear_acf",
    "fit_logistic",
    "fit_prejudice_remover",
    "fit_tree",
    "infer_feature_kinds",
    "predict_acf",
    "prejudice_index",
]
