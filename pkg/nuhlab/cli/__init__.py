# nuhlab/cli/__init__.py
# =============================================================================
# Purpose:
#   Command-line interface for the laboratory. One positional argument names
#   the experiment; an optional JSON/YAML file overrides its defaults.
#
# Summary:
#   - Resolves Settings (CLI > env > default) and sets up logging
#   - Validates the experiment config against core.contracts
#   - Creates a fresh run directory, writes config.yaml, runs the pipeline,
#     writes summary.json and the experiment's CSV/binary artifacts
#   - Exit status: 0 when every hard invariant holds, 1 when one fails or a
#     numerical routine does not converge, 2 on usage or domain errors
#
# Design Philosophy:
#   - Keep CLI thin; experiment logic lives in cli.pipelines and the
#     library packages.
# =============================================================================

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, NoReturn, Optional, Sequence

import yaml

from core.contracts import ExperimentConfigValidationError, validate_experiment_config

from ..config import Settings, load_settings, settings_snapshot
from ..errors import DomainError, NumericalError
from ..logging_setup import setup_app_logging
from ..paths import EXPERIMENT_CONFIGS_DIR
from ..run_manager import (
    capture_env,
    close_run_context,
    new_run,
    write_config,
    write_diagnostic,
    write_summary,
)
from .pipelines import EXPERIMENTS, PIPELINES, ExperimentContext, effective_config

__all__ = ["build_parser", "load_experiment_file", "main", "resolve_config_path", "run_experiment"]

logger = logging.getLogger(__name__)

ENV_KEYS = ["LOG_LEVEL", "NUHLAB_SEED", "NUHLAB_WORKERS", "NUHLAB_RUNS_DIR"]


def _usage_error(message: str) -> NoReturn:
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(2)


def resolve_config_path(path: Path, shipped_dir: Path = EXPERIMENT_CONFIGS_DIR) -> Path:
    """An existing file as given, else a bare name looked up among the shipped configs.

    ``--config distortion-da`` finds ``configs/experiments/distortion-da.json``.
    """
    if path.exists() or path.parent != Path("."):
        return path
    for suffix in ("", ".json", ".yaml", ".yml"):
        candidate = shipped_dir / f"{path.name}{suffix}"
        if candidate.is_file():
            return candidate
    return path


def load_experiment_file(path: Path) -> Dict[str, Any]:
    """Parse a JSON (or ``.yaml``/``.yml``) experiment config into a mapping."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DomainError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() in {".yaml", ".yml"}:
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise DomainError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise DomainError(f"config {path} must hold an object at the top level")
    return data


def run_experiment(
    experiment: str,
    user_config: Dict[str, Any],
    settings: Settings,
    *,
    seed_override: Optional[int] = None,
    plots: bool = False,
) -> int:
    """Execute one experiment end to end and return its exit status."""
    declared = user_config.get("experiment")
    if declared is not None and declared != experiment:
        _usage_error(f"config is for experiment {declared!r}, not {experiment!r}")
    try:
        validate_experiment_config(user_config)
        config = effective_config(
            experiment, user_config, seed=settings.seed, seed_override=seed_override
        )
    except (ExperimentConfigValidationError, DomainError) as exc:
        _usage_error(str(exc))

    run = new_run(experiment, base_dir=Path(settings.runs_dir))
    try:
        write_config(run, config, env=capture_env(ENV_KEYS))
        ctx = ExperimentContext(experiment, config, run, workers=settings.workers, plots=plots)
        logger.info(
            "experiment_start name=%s run_id=%s seed=%s workers=%s",
            experiment,
            run.run_id,
            ctx.seed,
            settings.workers,
        )
        try:
            outcome = PIPELINES[experiment](ctx)
        except NumericalError as exc:
            logger.error("experiment_numerical_failure name=%s error=%s", experiment, exc)
            write_diagnostic(run, {"experiment": experiment, "run_id": run.run_id, **exc.to_dict()})
            print(f"{run.run_id}: numerical failure: {exc}", file=sys.stderr)
            return 1
        except DomainError as exc:
            logger.error("experiment_domain_error name=%s error=%s", experiment, exc)
            _usage_error(str(exc))

        summary = {
            "experiment": experiment,
            "run_id": run.run_id,
            "seed": ctx.seed,
            "passed": outcome.passed,
            "hard": outcome.hard,
            "soft": outcome.soft,
            "headline": outcome.headline,
            "artifacts": outcome.artifacts,
            "settings": settings_snapshot(settings),
        }
        write_summary(run, summary)
        failed = sorted(k for k, ok in outcome.hard.items() if not ok)
        soft_failed = sorted(k for k, ok in outcome.soft.items() if not ok)
        if soft_failed:
            logger.warning("soft_checks_failed name=%s checks=%s", experiment, ",".join(soft_failed))
        logger.info(
            "experiment_done name=%s run_id=%s passed=%s failed=%s",
            experiment,
            run.run_id,
            outcome.passed,
            ",".join(failed) or "-",
        )
        status = "PASS" if outcome.passed else "FAIL " + ",".join(failed)
        print(f"{run.run_id}: {status} ({run.run_dir})")
        return 0 if outcome.passed else 1
    finally:
        close_run_context(run)


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    """Construct the CLI parser."""
    parser = argparse.ArgumentParser(
        prog="nuh-lab",
        description="Stochastic stability experiments for DA maps of the torus",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS, help="Experiment to run")
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="JSON or YAML file overriding the experiment defaults, or the name of a shipped config",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help=f"Master seed when the config leaves noise.seed unset (default: {settings.seed})",
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"Worker processes for ensembles (default: {settings.workers})",
    )
    parser.add_argument(
        "--out",
        default=None,
        help=f"Directory holding run folders (default: {settings.runs_dir})",
    )
    parser.add_argument(
        "--log-level",
        default=None,
        help=f"Logging level (default: {settings.log_level})",
    )
    parser.add_argument(
        "--plots",
        action="store_true",
        help="Also render PNG figures next to plot-data CSVs",
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the experiment and return the exit status."""
    parser = build_parser(load_settings())
    args = parser.parse_args(argv)
    if args.seed is not None and args.seed < 0:
        _usage_error("--seed must be non-negative")
    if args.workers is not None and args.workers < 1:
        _usage_error("--workers must be >= 1")

    settings = load_settings(
        cli_overrides={
            "seed": args.seed,
            "workers": args.workers,
            "runs_dir": args.out,
            "log_level": args.log_level,
        },
        logger=logger,
    )
    setup_app_logging(settings.log_level)

    user_config: Dict[str, Any] = {}
    if args.config is not None:
        try:
            user_config = load_experiment_file(resolve_config_path(args.config))
        except DomainError as exc:
            _usage_error(str(exc))
    return run_experiment(
        args.experiment, user_config, settings, seed_override=args.seed, plots=args.plots
    )


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
