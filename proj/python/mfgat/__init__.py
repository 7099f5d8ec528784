"""Radar-network target recognition with multi-faceted graph attention."""

from ._mfgat import (
    ConfigError,
    Dataset,
    FormatError,
    IoError,
    Model,
    NumericError,
    ShapeError,
    accuracy_from_counts,
    build_model,
    canonical_config,
    cli,
    config_hash,
    default_config,
    dft_magnitude,
    evaluate,
    generate,
    gradient_audit,
    load_checkpoint,
    load_dataset,
    paper_config,
    slide_window,
    train,
    window_count,
)

__all__ = [
    "ConfigError",
    "Dataset",
    "FormatError",
    "IoError",
    "Model",
    "NumericError",
    "ShapeError",
    "accuracy_from_counts",
    "build_model",
    "canonical_config",
    "cli",
    "config_hash",
    "default_config",
    "dft_magnitude",
    "evaluate",
    "generate",
    "gradient_audit",
    "load_checkpoint",
    "load_dataset",
    "paper_config",
    "slide_window",
    "train",
    "window_count",
]
