"""Versioned JSON-schema checks for experiment configs.

Problems are reported as ``location: message`` where the location is the
dotted path into the config (``noise.epsilon``) or ``<root>``.
"""

from __future__ import annotations

import copy
import json
from functools import lru_cache
from importlib import resources
from typing import Any, List, Mapping

from jsonschema import Draft7Validator, ValidationError

SCHEMA_FILES: dict[str, str] = {
    "v1": "experiment_config_v1.schema.json",
}


class ExperimentConfigValidationError(ValueError):
    """An experiment config does not match its schema; ``problems`` lists every violation."""

    def __init__(self, problems: List[str]) -> None:
        self.problems = problems
        super().__init__("experiment config failed validation: " + "; ".join(problems))


def _location(error: ValidationError) -> str:
    return ".".join(str(part) for part in error.absolute_path) or "<root>"


@lru_cache(maxsize=None)
def _validator(version: str) -> Draft7Validator:
    if version not in SCHEMA_FILES:
        raise ValueError(f"Unsupported experiment config schema version: {version}")
    text = resources.files(__package__).joinpath(SCHEMA_FILES[version]).read_text(encoding="utf-8")
    schema = json.loads(text)
    Draft7Validator.check_schema(schema)
    return Draft7Validator(schema)


def load_experiment_config_schema(version: str = "v1") -> dict[str, Any]:
    return copy.deepcopy(_validator(version).schema)


def validate_experiment_config(data: Mapping[str, Any], version: str = "v1") -> None:
    errors = sorted(_validator(version).iter_errors(data), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        raise ExperimentConfigValidationError([f"{_location(e)}: {e.message}" for e in errors])


__all__ = [
    "ExperimentConfigValidationError",
    "load_experiment_config_schema",
    "validate_experiment_config",
]
