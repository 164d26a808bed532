"""I/O helpers for crash-safe artifact writes and directory management."""

from .atomic_write import (
    AtomicWriteError,
    atomic_write,
    atomic_write_bytes,
    atomic_write_json,
    atomic_write_text,
)
from .dirs import DirectoryCreationError, ensure_dir

__all__ = [
    "AtomicWriteError",
    "DirectoryCreationError",
    "atomic_write",
    "atomic_write_bytes",
    "atomic_write_json",
    "atomic_write_text",
    "ensure_dir",
]
