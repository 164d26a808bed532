from __future__ import annotations

import json
from pathlib import Path

import pandas as pd
import pytest

from nuhlab.cli import build_parser, load_experiment_file, main, resolve_config_path
from nuhlab.cli.pipelines import DEFAULTS, EXPERIMENTS, effective_config, emit_plot_data
from nuhlab.config import Settings
from nuhlab.paths import EXPERIMENT_CONFIGS_DIR
from nuhlab.errors import DomainError


@pytest.fixture(autouse=True)
def _quiet_logging(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr("nuhlab.cli.setup_app_logging", lambda level: None)


def _write_config(tmp_path: Path, payload: dict) -> Path:
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def _latest(out: Path) -> Path:
    return (out / "latest").resolve()


def test_parser_lists_every_experiment() -> None:
    parser = build_parser(Settings())
    args = parser.parse_args(["rnue", "--workers", "3", "--seed", "5", "--plots"])
    assert (args.experiment, args.workers, args.seed, args.plots) == ("rnue", 3, 5, True)
    assert EXPERIMENTS == tuple(DEFAULTS)
    with pytest.raises(SystemExit) as excinfo:
        parser.parse_args(["lyapunov-spectrum"])
    assert excinfo.value.code == 2


def test_effective_config_merges_and_resolves_seed() -> None:
    user = {"noise": {"epsilon": 0.05}, "rnue": {"checkpoints": [500]}}
    config = effective_config("rnue", user, seed=7)
    assert config["experiment"] == "rnue"
    assert config["noise"] == {"epsilon": 0.05, "seed": 7, "streams": 8}
    assert config["rnue"]["checkpoints"] == [500]
    assert config["rnue"]["ensemble"] == DEFAULTS["rnue"]["ensemble"]
    assert config["map"]["strength"] == 0.63

    seeded = effective_config("rnue", {"noise": {"seed": 99}}, seed=7)
    assert seeded["noise"]["seed"] == 99
    forced = effective_config("rnue", {"noise": {"seed": 99}}, seed=7, seed_override=3)
    assert forced["noise"]["seed"] == 3

    with pytest.raises(DomainError):
        effective_config("lyapunov-spectrum", {}, seed=7)


def test_effective_config_does_not_mutate_defaults() -> None:
    effective_config("rnue", {"rnue": {"c_ladder": [0.5]}}, seed=1)["rnue"]["checkpoints"].append(1)
    assert DEFAULTS["rnue"]["checkpoints"] == [100, 300, 1000, 3000, 10_000]


def test_emit_plot_data(tmp_path: Path) -> None:
    path = emit_plot_data([(1, 0.5), (2.0, 0.25)], tmp_path / "plot.csv", columns=("n", "fraction"), png=True)
    assert path.read_bytes() == b"n,fraction\n1,0.5\n2,0.25\n"
    assert (tmp_path / "plot.png").stat().st_size > 0
    with pytest.raises(DomainError):
        emit_plot_data([], tmp_path / "empty.csv")


def test_load_experiment_file_formats(tmp_path: Path) -> None:
    yaml_path = tmp_path / "c.yaml"
    yaml_path.write_text("experiment: ulam\nulam:\n  grid_n: 16\n", encoding="utf-8")
    assert load_experiment_file(yaml_path) == {"experiment": "ulam", "ulam": {"grid_n": 16}}

    empty = tmp_path / "empty.yml"
    empty.write_text("", encoding="utf-8")
    assert load_experiment_file(empty) == {}

    for name, text in (("bad.json", "{"), ("list.json", "[1, 2]")):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        with pytest.raises(DomainError):
            load_experiment_file(path)
    with pytest.raises(DomainError):
        load_experiment_file(tmp_path / "missing.json")


def test_bare_config_names_resolve_to_shipped_configs(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    monkeypatch.chdir(tmp_path)
    shipped = resolve_config_path(Path("distortion-da"))
    assert shipped == EXPERIMENT_CONFIGS_DIR / "distortion-da.json"
    assert load_experiment_file(shipped)["experiment"] == "distortion"

    local = tmp_path / "distortion-da"
    local.write_text("{}", encoding="utf-8")
    assert resolve_config_path(Path("distortion-da")) == Path("distortion-da")

    assert resolve_config_path(Path("no-such-config")) == Path("no-such-config")
    nested = Path("sub") / "rnue-da"
    assert resolve_config_path(nested) == nested


def test_pliss_demo_end_to_end(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "runs"
    assert main(["pliss-demo", "--out", str(out), "--seed", "11"]) == 0

    run_dir = _latest(out)
    summary = json.loads((run_dir / "summary.json").read_text("utf-8"))
    assert summary["passed"] is True
    assert summary["seed"] == 11
    assert summary["hard"] == {"cardinality": True}
    assert summary["headline"]["indices"] == [1, 2, 4, 5]
    assert summary["artifacts"] == ["indices.csv"]
    assert pd.read_csv(run_dir / "indices.csv")["n"].tolist() == [1, 2, 4, 5]
    assert (run_dir / "config.yaml").exists()
    assert (run_dir / "logs" / "run.log").exists()
    assert "PASS" in capsys.readouterr().out


def test_failed_hard_check_exits_one(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _write_config(
        tmp_path,
        {
            "experiment": "basins",
            "map": {"kind": "two-attractor"},
            "noise": {"epsilon": 0.05, "streams": 2},
            "basins": {"ensemble": 16, "n_steps": 2000, "burn_in": 100, "expected_clusters": 3},
        },
    )
    out = tmp_path / "runs"
    assert main(["basins", "--config", str(config), "--out", str(out)]) == 1
    summary = json.loads((_latest(out) / "summary.json").read_text("utf-8"))
    assert summary["hard"] == {"expected_clusters": False}
    assert summary["headline"]["clusters"] == 2
    assert "FAIL expected_clusters" in capsys.readouterr().out


def test_numerical_failure_writes_diagnostic(tmp_path: Path) -> None:
    config = _write_config(
        tmp_path,
        {"ulam": {"grid_n": 8, "samples_per_cell": 16, "max_iters": 1, "ensemble": 2, "n_steps": 50, "burn_in": 5}},
    )
    out = tmp_path / "runs"
    assert main(["ulam", "--config", str(config), "--out", str(out)]) == 1
    run_dir = _latest(out)
    diagnostic = json.loads((run_dir / "diagnostic.json").read_text("utf-8"))
    assert diagnostic["error"] == "NumericalError"
    assert diagnostic["residual"] > 0.0
    assert not (run_dir / "summary.json").exists()


@pytest.mark.parametrize(
    "argv, payload, message",
    [
        (["rnue", "--workers", "0"], None, "--workers"),
        (["rnue", "--seed", "-4"], None, "--seed"),
        (["rnue"], {"experiment": "ulam"}, "not 'rnue'"),
        (["rnue"], {"noise": {"epsilon": 0.9}}, "noise.epsilon"),
        (["hyp-times"], {"map": {"kind": "two-attractor"}}, "hyperbolic torus map"),
        (["pliss-demo"], {"pliss-demo": {"c1": 1.0, "c2": 0.5}}, "H >= c2 > c1"),
    ],
)
def test_usage_and_domain_errors_exit_two(
    tmp_path: Path, capsys: pytest.CaptureFixture[str], argv, payload, message
) -> None:
    extra = [] if payload is None else ["--config", str(_write_config(tmp_path, payload))]
    with pytest.raises(SystemExit) as excinfo:
        main([*argv, *extra, "--out", str(tmp_path / "runs")])
    assert excinfo.value.code == 2
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert message in err


def test_unreadable_config_exits_two(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as excinfo:
        main(["rnue", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "runs")])
    assert excinfo.value.code == 2
    assert "cannot read config" in capsys.readouterr().err


def test_results_do_not_depend_on_worker_count(tmp_path: Path) -> None:
    config = _write_config(
        tmp_path,
        {
            "map": {"kind": "two-attractor"},
            "noise": {"epsilon": 0.05, "seed": 123, "streams": 3},
            "basins": {"ensemble": 9, "n_steps": 400, "burn_in": 20},
        },
    )
    tables = []
    for workers in ("1", "2"):
        out = tmp_path / f"runs-{workers}"
        assert main(["basins", "--config", str(config), "--out", str(out), "--workers", workers]) == 0
        tables.append((_latest(out) / "basins.csv").read_bytes())
    assert tables[0] == tables[1]
