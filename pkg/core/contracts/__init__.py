"""Versioned data contracts and validation helpers."""

from .validate import (
    ExperimentConfigValidationError,
    load_experiment_config_schema,
    validate_experiment_config,
)

__all__ = [
    "ExperimentConfigValidationError",
    "load_experiment_config_schema",
    "validate_experiment_config",
]
