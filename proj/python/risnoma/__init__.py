"""RIS phase optimization with closed-form NOMA precoding."""

from ._risnoma import (
    ConfigurationError,
    Dataset,
    DegenerateInputError,
    Error,
    FormatError,
    IoError,
    RisnetParams,
    SinrTargets,
    TrainingError,
    UsageError,
    evaluate,
    evaluate_baseline,
    generate_dataset,
    init_params,
    optimal_precoding,
    param_count,
    read_checkpoint,
    read_dataset,
    train,
    write_checkpoint,
    write_dataset,
)

__all__ = [
    "ConfigurationError",
    "Dataset",
    "DegenerateInputError",
    "Error",
    "FormatError",
    "IoError",
    "RisnetParams",
    "SinrTargets",
    "TrainingError",
    "UsageError",
    "evaluate",
    "evaluate_baseline",
    "generate_dataset",
    "init_params",
    "optimal_precoding",
    "param_count",
    "read_checkpoint",
    "read_dataset",
    "train",
    "write_checkpoint",
    "write_dataset",
]
