"""Process-wide logging: a rotating ``logs/app.log``, the console, and one file per run.

Ensemble chunks may run in pool workers, so records carry the process name.
"""

from __future__ import annotations

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional, Union

from core.io.dirs import ensure_dir

from .paths import APP_LOG_FILE

_configured = False

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(processName)s | %(name)s | %(message)s"
APP_LOG_MAX_BYTES = 5 * 1024 * 1024
APP_LOG_BACKUPS = 3
# Third-party loggers that flood DEBUG output with font and image plumbing.
QUIET_LOGGERS = ("matplotlib", "PIL")

LevelLike = Union[str, int, None]


def _resolve_level(level: LevelLike) -> int:
    """Map a level name, number or digit string to an int; anything else is INFO."""
    if isinstance(level, int):
        return level
    if not isinstance(level, str):
        return logging.INFO
    text = level.strip()
    if text.isdigit():
        return int(text)
    named = logging.getLevelName(text.upper())
    return named if isinstance(named, int) else logging.INFO


def _formatted(handler: logging.Handler, level: Optional[int] = None) -> logging.Handler:
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    if level is not None:
        handler.setLevel(level)
    return handler


def setup_app_logging(level: LevelLike = "INFO", *, log_file: Path = APP_LOG_FILE) -> None:
    """Install the app log and console handlers on first call; later calls only change the level."""
    global _configured
    resolved = _resolve_level(level)
    root = logging.getLogger()
    if not _configured:
        ensure_dir(log_file.parent)
        for handler in list(root.handlers):
            root.removeHandler(handler)
            handler.close()
        root.addHandler(
            _formatted(
                RotatingFileHandler(
                    log_file,
                    encoding="utf-8",
                    maxBytes=APP_LOG_MAX_BYTES,
                    backupCount=APP_LOG_BACKUPS,
                )
            )
        )
        root.addHandler(_formatted(logging.StreamHandler()))
        for name in QUIET_LOGGERS:
            logging.getLogger(name).setLevel(logging.WARNING)
        _configured = True
    root.setLevel(resolved)
    for handler in root.handlers:
        handler.setLevel(resolved)


def attach_run_file_handler(log_file: Path, level: LevelLike = None) -> logging.Handler:
    """Mirror root records into ``<run>/logs/run.log`` until :func:`detach_handler`."""
    ensure_dir(log_file.parent)
    handler = _formatted(
        logging.FileHandler(log_file, encoding="utf-8"),
        _resolve_level(level) if level is not None else None,
    )
    logging.getLogger().addHandler(handler)
    return handler


def detach_handler(handler: logging.Handler) -> None:
    logging.getLogger().removeHandler(handler)
    handler.close()
