# nuhlab/config.py
# =============================================================================
# Purpose:
#   Runtime settings for the laboratory (log level, master seed, worker count,
#   where run directories go). Experiment parameters live in the JSON config
#   validated by core.contracts; this module only covers the process-level
#   knobs that are sensible to set from the environment.
#
# Summary:
#   - Settings dataclass with typed defaults
#   - load_settings() resolves CLI > env (.env via python-dotenv) > default
#   - Every resolved key is logged with its source
# =============================================================================
from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Literal, Mapping, Tuple, overload

from dotenv import load_dotenv

from .paths import RUNS_DIR

_LOGGER = logging.getLogger("nuhlab.config")


@dataclass
class Settings:
    """Strongly-typed container for process-level settings."""

    log_level: str = "INFO"
    seed: int = 7
    workers: int = 1
    runs_dir: str = str(RUNS_DIR)

    @property
    def runs_path(self) -> Path:
        return Path(self.runs_dir).expanduser()


SEED_LIMIT = 2**64
Source = Literal["cli", "env", "default"]


def _blank(value: Any) -> bool:
    return value is None or (isinstance(value, str) and not value.strip())


def _parse_level(value: Any) -> str:
    text = str(value).strip().upper()
    if text.isdigit() or isinstance(logging.getLevelName(text), int):
        return text
    raise ValueError(f"unknown log level {value!r}")


def _parse_int(lo: int, hi: int | None = None) -> Callable[[Any], int]:
    def parse(value: Any) -> int:
        number = int(value.strip() if isinstance(value, str) else value)
        if number < lo or (hi is not None and number >= hi):
            raise ValueError(f"{number} outside [{lo}, {hi})")
        return number

    return parse


def _parse_path(value: Any) -> str:
    return str(value).strip()


@dataclass(frozen=True)
class _Field:
    env: str
    parse: Callable[[Any], Any]


_FIELDS: Dict[str, _Field] = {
    "log_level": _Field("LOG_LEVEL", _parse_level),
    "seed": _Field("NUHLAB_SEED", _parse_int(0, SEED_LIMIT)),
    "workers": _Field("NUHLAB_WORKERS", _parse_int(1)),
    "runs_dir": _Field("NUHLAB_RUNS_DIR", _parse_path),
}


def _resolve_field(
    name: str, field: _Field, cli_value: Any, default: Any, log: logging.Logger
) -> Tuple[Any, Source]:
    candidates: Tuple[Tuple[Any, Source], ...] = (
        (cli_value, "cli"),
        (os.getenv(field.env), "env"),
    )
    for raw, source in candidates:
        if _blank(raw):
            continue
        try:
            return field.parse(raw), source
        except (TypeError, ValueError):
            log.warning(
                "config_invalid_value key=%s source=%s fallback=%s", name, source, default
            )
            break
    return default, "default"


@overload
def load_settings(
    *,
    cli_overrides: Mapping[str, Any] | None = None,
    include_sources: Literal[True],
    logger: logging.Logger | None = None,
) -> Tuple[Settings, Dict[str, str]]: ...


@overload
def load_settings(
    *,
    cli_overrides: Mapping[str, Any] | None = None,
    include_sources: Literal[False] = False,
    logger: logging.Logger | None = None,
) -> Settings: ...


def load_settings(
    *,
    cli_overrides: Mapping[str, Any] | None = None,
    include_sources: bool = False,
    logger: logging.Logger | None = None,
) -> Settings | Tuple[Settings, Dict[str, str]]:
    """Resolve settings as CLI > environment (after loading ``.env``) > default.

    An unparsable CLI or env value logs ``config_invalid_value`` and falls back
    to the default. With ``include_sources`` the result is ``(settings, sources)``.
    """

    load_dotenv()
    log = logger or _LOGGER
    overrides = dict(cli_overrides or {})
    defaults = asdict(Settings())
    values: Dict[str, Any] = {}
    sources: Dict[str, str] = {}
    for name, field in _FIELDS.items():
        value, source = _resolve_field(name, field, overrides.get(name), defaults[name], log)
        log.info("config_resolved key=%s value=%s source=%s", name, value, source)
        values[name] = value
        sources[name] = source

    settings = Settings(**values)
    return (settings, sources) if include_sources else settings


def settings_snapshot(settings: Settings) -> Dict[str, Any]:
    return asdict(settings)
