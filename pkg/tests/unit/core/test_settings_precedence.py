from __future__ import annotations

import logging

import pytest

from nuhlab.config import Settings, load_settings, settings_snapshot


def test_defaults(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv("NUHLAB_RUNS_DIR")
    settings, sources = load_settings(include_sources=True)
    assert settings.log_level == "INFO"
    assert settings.seed == 7
    assert settings.workers == 1
    assert set(sources.values()) == {"default"}


def test_precedence_cli_wins(
    monkeypatch: pytest.MonkeyPatch, caplog: pytest.LogCaptureFixture
) -> None:
    caplog.set_level(logging.INFO, logger="nuhlab.config")
    monkeypatch.setenv("NUHLAB_SEED", "11")

    settings, sources = load_settings(cli_overrides={"seed": 42}, include_sources=True)

    assert settings.seed == 42
    assert sources["seed"] == "cli"
    assert any(
        "config_resolved key=seed" in record.message and "source=cli" in record.message
        for record in caplog.records
    )


def test_precedence_env_beats_default(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("NUHLAB_WORKERS", "4")
    monkeypatch.setenv("LOG_LEVEL", "debug")

    settings, sources = load_settings(cli_overrides={"workers": None}, include_sources=True)

    assert settings.workers == 4
    assert settings.log_level == "DEBUG"
    assert sources["workers"] == "env"
    assert sources["runs_dir"] == "env"


@pytest.mark.parametrize(
    "key, value",
    [
        ("NUHLAB_WORKERS", "0"),
        ("NUHLAB_WORKERS", "many"),
        ("NUHLAB_SEED", "-3"),
        ("NUHLAB_SEED", str(2**64)),
        ("LOG_LEVEL", "CHATTY"),
    ],
)
def test_invalid_env_values_fall_back_with_warning(
    monkeypatch: pytest.MonkeyPatch, caplog: pytest.LogCaptureFixture, key: str, value: str
) -> None:
    caplog.set_level(logging.WARNING, logger="nuhlab.config")
    monkeypatch.setenv(key, value)

    settings = load_settings()

    assert settings.workers == 1
    assert settings.seed == 7
    assert settings.log_level == "INFO"
    assert any("config_invalid_value" in record.message for record in caplog.records)


def test_snapshot_and_runs_path(tmp_path) -> None:
    settings = Settings(runs_dir=str(tmp_path / "runs"))
    assert settings.runs_path == tmp_path / "runs"
    assert settings_snapshot(settings)["seed"] == 7
