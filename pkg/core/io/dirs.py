"""Directory helpers for run folders and log folders.

Environment knobs, read on every call so tests and long sessions can flip them:

- ``NUHLAB_AUTO_CREATE_DIRS`` (default ``true``): when false, a missing
  directory is an error instead of being created.
- ``NUHLAB_DIR_MODE`` (default ``0750``): octal permissions applied to new
  directories on POSIX; ignored on Windows.

Each directory created here is logged once as
``created dir path=<abs> mode=0750 component=core.io``.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

_LOGGER = logging.getLogger(__name__)

DEFAULT_DIR_MODE = 0o750
_OFF = frozenset({"0", "false", "f", "no", "n", "off"})


class DirectoryCreationError(RuntimeError):
    """A required directory is missing and could not (or may not) be created."""


def dir_mode_from_env() -> Tuple[int, bool]:
    """``(mode, applies)`` from ``NUHLAB_DIR_MODE``; an unparsable literal logs and falls back."""

    raw = os.getenv("NUHLAB_DIR_MODE", "").strip().lower().removeprefix("0o")
    mode = DEFAULT_DIR_MODE
    if raw:
        try:
            mode = int(raw, 8)
        except ValueError:
            _LOGGER.warning("dir_mode_invalid_literal value=%r fallback=%04o", raw, DEFAULT_DIR_MODE)
    return mode, os.name != "nt"


@dataclass(frozen=True)
class DirPolicy:
    auto_create: bool
    mode: int
    apply_mode: bool

    @classmethod
    def from_env(cls) -> "DirPolicy":
        flag = os.getenv("NUHLAB_AUTO_CREATE_DIRS", "").strip().lower()
        mode, applies = dir_mode_from_env()
        return cls(auto_create=flag not in _OFF, mode=mode, apply_mode=applies)


def ensure_dir(path: Path | str, create: Optional[bool] = None) -> Path:
    """Return *path* resolved, creating it (and parents) under the env policy.

    ``create`` overrides ``NUHLAB_AUTO_CREATE_DIRS`` for this call.
    """

    target = Path(path).expanduser().resolve()
    if target.is_dir():
        return target
    if target.exists():
        raise DirectoryCreationError(f"expected directory path={target} but found file")

    policy = DirPolicy.from_env()
    if not (policy.auto_create if create is None else create):
        raise DirectoryCreationError(
            f"auto-create disabled path={target} hint='set NUHLAB_AUTO_CREATE_DIRS=true or create it'"
        )
    try:
        target.mkdir(parents=True)
    except FileExistsError:
        # created concurrently by a pool worker
        return target
    except OSError as exc:  # pragma: no cover - system-dependent
        raise DirectoryCreationError(f"cannot create path={target} reason={exc.strerror}") from exc

    if policy.apply_mode:
        os.chmod(target, policy.mode)
    _LOGGER.info("created dir path=%s mode=%04o component=core.io", target, policy.mode)
    return target


__all__ = [
    "DEFAULT_DIR_MODE",
    "DirPolicy",
    "DirectoryCreationError",
    "dir_mode_from_env",
    "ensure_dir",
]
