"""Adversarial video summarization: frame scoring, change-point
segmentation, key-shot selection and the evaluation metrics."""

from ._core import (
    ConfigError,
    DegenerateInputError,
    DimensionError,
    Summarizer,
    UndefinedCorrelationError,
    __version__,
    fscore,
    generate_synthetic,
    kendall_tau,
    knapsack_select,
    kts_changepoints,
    select_keyshots,
    spearman_rho,
)

__all__ = [
    "ConfigError",
    "DegenerateInputError",
    "DimensionError",
    "Summarizer",
    "UndefinedCorrelationError",
    "__version__",
    "fscore",
    "generate_synthetic",
    "kendall_tau",
    "knapsack_select",
    "kts_changepoints",
    "select_keyshots",
    "spearman_rho",
]
