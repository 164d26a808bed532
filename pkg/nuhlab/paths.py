"""Project-relative locations for configs, run folders and the app log."""

from __future__ import annotations

from pathlib import Path


PROJECT_ROOT = Path(__file__).resolve().parents[1]
CONFIGS_DIR = PROJECT_ROOT / "configs"
EXPERIMENT_CONFIGS_DIR = CONFIGS_DIR / "experiments"

RUNS_DIR = PROJECT_ROOT / "runs"

APP_LOGS_DIR = PROJECT_ROOT / "logs"
APP_LOG_FILE = APP_LOGS_DIR / "app.log"


def runs_latest_pointer(base_dir: Path = RUNS_DIR) -> Path:
    return base_dir / "latest"


def safe_slug(value: str) -> str:
    return value.replace("/", "-").replace("=", "-").replace(" ", "-")
