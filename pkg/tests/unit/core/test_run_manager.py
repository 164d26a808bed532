from __future__ import annotations

import json
import logging
from datetime import datetime, timezone

import numpy as np
import pandas as pd
import pytest
import yaml

from nuhlab.errors import NumericalError
from nuhlab.run_manager import (
    capture_env,
    close_run_context,
    json_ready,
    new_run,
    write_bytes,
    write_config,
    write_diagnostic,
    write_frame,
    write_summary,
)

WHEN = datetime(2026, 3, 4, 5, 6, 7, tzinfo=timezone.utc)


@pytest.fixture
def run(tmp_path):
    ctx = new_run("hyp-times", base_dir=tmp_path, when=WHEN)
    yield ctx
    close_run_context(ctx)


def test_run_ids_are_timestamped_and_never_reused(tmp_path, run) -> None:
    assert run.run_id == "2026-03-04_050607_hyp-times"
    again = new_run("hyp-times", base_dir=tmp_path, when=WHEN)
    try:
        assert again.run_id == "2026-03-04_050607_hyp-times-2"
        latest = tmp_path / "latest"
        assert latest.resolve() == again.run_dir.resolve()
    finally:
        close_run_context(again)


def test_run_log_receives_records(run) -> None:
    logging.getLogger("nuhlab.test").warning("orbit_checked id=1")
    run.log_handler.flush()
    assert "orbit_checked id=1" in run.run_log_file.read_text("utf-8")


def test_closed_run_stops_logging(tmp_path) -> None:
    ctx = new_run("ulam", base_dir=tmp_path, when=WHEN)
    close_run_context(ctx)
    logging.getLogger("nuhlab.test").warning("after_close")
    assert "after_close" not in ctx.run_log_file.read_text("utf-8")


def test_json_ready_unwraps_numpy_and_nonfinite() -> None:
    payload = {
        "a": np.float64(1.5),
        "b": np.int64(3),
        "c": np.array([1.0, np.inf]),
        "d": (np.bool_(True), float("nan")),
        1: None,
    }
    assert json_ready(payload) == {"a": 1.5, "b": 3, "c": [1.0, None], "d": [True, None], "1": None}


def test_summary_config_and_diagnostic(run, monkeypatch) -> None:
    write_summary(run, {"passed": np.bool_(False), "headline": {"q05": np.float64(0.25)}})
    assert json.loads(run.summary_file.read_text("utf-8")) == {
        "headline": {"q05": 0.25},
        "passed": False,
    }

    monkeypatch.setenv("NUHLAB_SEED", "5")
    write_config(run, {"noise": {"epsilon": 0.05}}, env=capture_env(["NUHLAB_SEED", "MISSING"]))
    stored = yaml.safe_load(run.config_file.read_text("utf-8"))
    assert stored == {"config": {"noise": {"epsilon": 0.05}}, "env": {"NUHLAB_SEED": "5", "MISSING": ""}}

    err = NumericalError("power iteration stalled", residual=1e-3)
    path = write_diagnostic(run, err.to_dict())
    assert json.loads(path.read_text("utf-8"))["residual"] == 1e-3


def test_frames_use_lf_and_round_trip_floats(run) -> None:
    value = 0.1 + 0.2
    path = write_frame(run, "t.csv", pd.DataFrame({"n": [1, 2], "x": [value, 1.0 / 3.0]}))
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    back = pd.read_csv(path, float_precision="round_trip")
    assert back["x"].tolist() == [value, 1.0 / 3.0]


def test_binary_artifacts(run) -> None:
    path = write_bytes(run, "grid.bin", b"\x00\x01")
    assert path.read_bytes() == b"\x00\x01"
