from __future__ import annotations

import itertools
import logging
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Any, Dict, Mapping, Optional

import numpy as np
import pandas as pd
import yaml

from core.io.atomic_write import atomic_write, atomic_write_bytes, atomic_write_json, atomic_write_text
from core.io.dirs import ensure_dir

from .logging_setup import attach_run_file_handler, detach_handler
from .paths import RUNS_DIR, runs_latest_pointer, safe_slug

# Timestamp format: 2026-10-18_170201
TS_FMT = "%Y-%m-%d_%H%M%S"
FLOAT_FORMAT = "%.17g"

_LOGGER = logging.getLogger(__name__)


@dataclass
class RunContext:
    """One run folder: ``config.yaml``, ``summary.json``, artifacts and ``logs/run.log``."""

    run_id: str
    run_dir: Path
    log_handler: logging.Handler

    @property
    def logs_dir(self) -> Path:
        return self.run_dir / "logs"

    @property
    def run_log_file(self) -> Path:
        return self.logs_dir / "run.log"

    @property
    def summary_file(self) -> Path:
        return self.run_dir / "summary.json"

    @property
    def config_file(self) -> Path:
        return self.run_dir / "config.yaml"

    def artifact(self, name: str) -> Path:
        return self.run_dir / name


def _compose_run_id(experiment: str, when: Optional[datetime] = None) -> str:
    ts = (when or datetime.now(timezone.utc)).strftime(TS_FMT)
    return f"{ts}_{safe_slug(experiment.lower())}"


def _claim_run_dir(base_dir: Path, run_id: str) -> Path:
    """Create and return ``base_dir/run_id`` or the first free ``run_id-N``."""
    for suffix in itertools.count(1):
        candidate = base_dir / (run_id if suffix == 1 else f"{run_id}-{suffix}")
        try:
            candidate.mkdir()
        except FileExistsError:
            continue
        return candidate
    raise AssertionError("unreachable")


def _point_latest(base_dir: Path, run_dir: Path) -> None:
    # Relative target keeps the link valid when the runs folder is moved.
    link = runs_latest_pointer(base_dir)
    if link.is_symlink() or link.is_file():
        link.unlink()
    try:
        link.symlink_to(os.path.relpath(run_dir, base_dir), target_is_directory=True)
    except OSError:
        atomic_write_text(link, run_dir.name)


def new_run(
    experiment: str,
    base_dir: Path = RUNS_DIR,
    when: Optional[datetime] = None,
    set_latest: bool = True,
) -> RunContext:
    """Claim a fresh run folder, attach its log handler and repoint ``latest``."""
    base_dir = ensure_dir(base_dir)
    run_dir = _claim_run_dir(base_dir, _compose_run_id(experiment, when=when))
    ensure_dir(run_dir / "logs")
    handler = attach_run_file_handler(run_dir / "logs" / "run.log")
    ctx = RunContext(run_id=run_dir.name, run_dir=run_dir, log_handler=handler)
    if set_latest:
        _point_latest(base_dir, run_dir)
    _LOGGER.info("run_created id=%s dir=%s", ctx.run_id, run_dir)
    return ctx


def json_ready(value: Any) -> Any:
    """Plain-JSON copy of ``value``: numpy types unwrapped, NaN/inf as ``None``."""
    if isinstance(value, Mapping):
        return {str(k): json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_ready(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        f = float(value)
        return f if math.isfinite(f) else None
    if isinstance(value, Path):
        return str(value)
    return value


def write_summary(ctx: RunContext, summary: Mapping[str, Any]) -> Path:
    atomic_write_json(ctx.summary_file, json_ready(summary))
    return ctx.summary_file


def write_diagnostic(ctx: RunContext, payload: Mapping[str, Any]) -> Path:
    path = ctx.artifact("diagnostic.json")
    atomic_write_json(path, json_ready(payload))
    return path


def write_config(
    ctx: RunContext, config: Mapping[str, Any], env: Optional[Dict[str, Any]] = None
) -> None:
    """
    Persist the effective configuration, including selected environment values.
    """
    payload: Dict[str, Any] = {"config": json_ready(config)}
    if env:
        payload["env"] = env
    atomic_write_text(ctx.config_file, yaml.safe_dump(payload, sort_keys=False))


def write_frame(ctx: RunContext, name: str, frame: pd.DataFrame) -> Path:
    """CSV with ``\\n`` line endings and round-trip float formatting."""
    path = ctx.artifact(name)

    def _write_frame(fh: IO[Any]) -> None:
        frame.to_csv(fh, index=False, lineterminator="\n", float_format=FLOAT_FORMAT)

    atomic_write(path, _write_frame, newline="\n", encoding="utf-8")
    return path


def write_bytes(ctx: RunContext, name: str, data: bytes) -> Path:
    path = ctx.artifact(name)
    atomic_write_bytes(path, data)
    return path


def capture_env(keys: list[str]) -> Dict[str, str]:
    """
    Helper to capture specific env keys into config.yaml for reproducibility.
    """
    return {k: os.getenv(k, "") for k in keys}


def close_run_context(ctx: RunContext) -> None:
    try:
        detach_handler(ctx.log_handler)
    except ValueError:  # pragma: no cover
        pass


__all__ = [
    "FLOAT_FORMAT",
    "RunContext",
    "capture_env",
    "close_run_context",
    "json_ready",
    "new_run",
    "write_bytes",
    "write_config",
    "write_diagnostic",
    "write_frame",
    "write_summary",
]
