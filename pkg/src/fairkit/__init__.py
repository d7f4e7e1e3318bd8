"""Fairness-aware binary classification: measure and mitigate potentially
discriminatory patterns in data and predictions."""

from .core import Dataset, partition_groups, validate_dataset
from .metrics import (
    MetricResult,
    auc,
    consistency,
    mean_difference,
    normalized_mean_difference,
    pearson_r_with_ci,
    situation_test_score,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "MetricResult",
    "auc",
    "consistency",
    "mean_difference",
    "normalized_mean_difference",
    "partition_groups",
    "pearson_r_with_ci",
    "situation_test_score",
    "validate_dataset",
]
