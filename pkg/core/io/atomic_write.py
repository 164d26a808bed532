"""Crash-safe artifact writes.

Every run artifact (summary JSON, CSV tables, binary grids) is staged in a
hidden sibling file, fsync-ed, then renamed over the target with
``os.replace``. Readers of a run directory see either the previous artifact or
the complete new one, never a torn table.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any, Callable, Iterator

from .dirs import ensure_dir

logger = logging.getLogger(__name__)


class AtomicWriteError(RuntimeError):
    """The staged artifact could not be written or moved into place."""


def _sync_parent(parent: Path) -> None:
    # Directory handles cannot be fsync-ed on every platform.
    try:
        fd = os.open(parent, os.O_RDONLY)
    except OSError:
        return
    try:
        os.fsync(fd)
    except OSError:
        logger.debug("directory fsync unsupported path=%s", parent)
    finally:
        os.close(fd)


@contextmanager
def staged_file(
    path: Path, *, binary: bool = False, encoding: str = "utf-8", newline: str | None = None
) -> Iterator[IO[Any]]:
    """Yield a handle whose contents replace *path* only if the block succeeds."""

    if binary and newline is not None:
        raise ValueError("newline is unsupported in binary mode")
    parent = path.parent
    ensure_dir(parent)
    fd, staged_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".part", dir=parent)
    staged = Path(staged_name)
    try:
        if binary:
            handle: IO[Any] = os.fdopen(fd, "wb")
        else:
            handle = os.fdopen(fd, "w", encoding=encoding, newline=newline)
        with handle:
            yield handle
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(staged, path)
    except OSError as exc:
        staged.unlink(missing_ok=True)
        raise AtomicWriteError(f"atomic write failed path={path} reason={exc}") from exc
    except BaseException:
        staged.unlink(missing_ok=True)
        raise
    _sync_parent(parent)


def atomic_write(
    path: Path,
    write: Callable[[IO[Any]], None],
    *,
    mode: str = "w",
    encoding: str = "utf-8",
    newline: str | None = None,
) -> None:
    """Fill a staged handle with *write* and move it onto *path*."""

    with staged_file(path, binary="b" in mode, encoding=encoding, newline=newline) as fh:
        write(fh)


def atomic_write_text(path: Path, content: str, *, encoding: str = "utf-8") -> None:
    with staged_file(path, encoding=encoding, newline="") as fh:
        fh.write(content)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    with staged_file(path, binary=True) as fh:
        fh.write(data)


def atomic_write_json(path: Path, payload: Any) -> None:
    """Indented, key-sorted JSON; NaN and infinities raise ``ValueError``."""

    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)
    atomic_write_text(path, text + "\n")


__all__ = [
    "AtomicWriteError",
    "atomic_write",
    "atomic_write_bytes",
    "atomic_write_json",
    "atomic_write_text",
    "staged_file",
]
