import sys
from pathlib import Path

import pytest

# Ensure the project root is on sys.path so `import nuhlab` works in tests.
PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))


@pytest.fixture(scope="session", autouse=True)
def _headless_plots() -> None:
    """Render figures without a display when pipelines run with plots enabled."""

    import matplotlib

    matplotlib.use("Agg")


@pytest.fixture(autouse=True)
def _isolated_settings(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep run folders and env-driven settings out of the working tree."""

    for key in ("NUHLAB_SEED", "NUHLAB_WORKERS", "LOG_LEVEL", "NUHLAB_DIR_MODE"):
        monkeypatch.delenv(key, raising=False)
    monkeypatch.setenv("NUHLAB_AUTO_CREATE_DIRS", "true")
    monkeypatch.setenv("NUHLAB_RUNS_DIR", str(tmp_path / "runs"))
