"""Named experiment pipelines.

Each pipeline receives an :class:`ExperimentContext` (effective config, run
directory, seeding) and returns an :class:`ExperimentOutcome`: headline
statistics plus hard invariants (which decide the exit status) and soft
checks (reported only).
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.io.atomic_write import atomic_write

from ..cones.cones import ConeParams, check_cone_invariance
from ..cones.curvature import CHART_RADIUS, iterate_cu_curve
from ..cones.directions import (
    CocycleTrace,
    cocycle_log_norms,
    domination_gap,
    estimate_direction,
)
from ..dynamics.conditions import verify_conditions
from ..dynamics.fixtures import TwoAttractorMap
from ..dynamics.maps import DAParams, LinearAnosovMap, SelfMap, TorusMap, make_da_map
from ..dynamics.torus import FloatArray, Mat2, wrap
from ..errors import ConeExitError, DomainError
from ..hyperbolic.curves import (
    check_backward_contraction,
    check_delta1,
    check_distortion,
    curve_pushforward_density,
    distortion_bound,
    distortion_trend,
)
from ..hyperbolic.pliss import PlissInput, pliss_select
from ..hyperbolic.times import (
    choose_alpha,
    detect_hyperbolic_times,
    estimate_density,
    verify_hyperbolic_time,
)
from ..measures.basins import cluster_basins, cluster_labels
from ..measures.bounds import expansion_rate, frequency_tail_rate, max_admissible_zeta
from ..measures.experiments import (
    frequency_experiment,
    rnue_experiment,
    srb_reference,
    stability_curve,
)
from ..measures.histogram import (
    GridHistogram,
    ensemble_histogram,
    l1_distance,
    marginal_wasserstein,
)
from ..measures.ulam import stationary_density, ulam_operator
from ..noise.model import NoiseModel, RngStream, SeedPlan
from ..noise.orbits import (
    RandomOrbit,
    check_nondegeneracy,
    ensemble_starts,
    orbit_frame,
    random_orbit,
)
from ..run_manager import FLOAT_FORMAT, RunContext, write_bytes, write_frame

_LOGGER = logging.getLogger(__name__)

# single-orbit streams live far above the ensemble stream ids
ORBIT_STREAM_BASE = 1 << 32
# late distortion may exceed the calibrated maximum by at most this factor
CALIBRATION_SLACK = 1.1

COMMON_DEFAULTS: Dict[str, Any] = {
    "map": {
        "kind": "da",
        "base": [2, 1, 1, 1],
        "center": [0.0, 0.0],
        "radius": 0.12,
        "strength": 0.63,
    },
    "noise": {"epsilon": 0.01, "seed": None, "streams": 8},
    "cones": {"width": 0.4, "lambda": 0.5},
}

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "verify-map": {
        "grid_n": 256,
        "lambda_target": 0.5,
        "delta0_max": 0.1,
        "cone_samples": 4096,
        "nondegeneracy_samples": 200_000,
        "nondegeneracy_point": [0.3, 0.7],
        "settle": 30,
    },
    "pliss-demo": {"values": [2, 2, -1, 2, 2], "c1": 0.5, "c2": 1.0, "H": 2.0},
    "hyp-times": {
        "n": 10_000,
        "settle": 30,
        "alpha": None,
        "safety": 4.0,
        "ensemble": 200,
        "dump_orbit": False,
    },
    "rnue": {
        "ensemble": 1000,
        "n_steps": 10_000,
        "settle": 30,
        "checkpoints": [100, 300, 1000, 3000, 10_000],
        "c_ladder": [0.0, 0.01, 0.02, 0.05, 0.1],
        "fail_c": None,
        "cs_orbits": 10,
    },
    "frequency": {
        "ensemble": 1000,
        "n_ladder": [100, 1000, 10_000],
        "center": None,
        "radius": None,
        "zeta_bad": None,
        "partition_size": 2,
        "grid_n": 64,
    },
    "ulam": {
        "grid_n": 32,
        "samples_per_cell": 256,
        "rounds": 16,
        "tol": 1e-10,
        "max_iters": 10_000,
        "ensemble": 100,
        "n_steps": 10_000,
        "burn_in": 1000,
        "agreement_max": 0.1,
        "uniform_max": None,
        "dump_matrix": False,
    },
    "stability": {
        "epsilons": [0.1, 0.05, 0.02, 0.01],
        "grid_n": 32,
        "ensemble": 100,
        "n_steps": 10_000,
        "burn_in": 1000,
        "reference_ensemble": 200,
        "reference_steps": 100_000,
        "refinement": [16, 32, 64],
        "band": 0.02,
        "max_l1": None,
        "ulam_samples": None,
    },
    "basins": {
        "ensemble": 100,
        "n_steps": 10_000,
        "burn_in": 1000,
        "modes": 2,
        "threshold": 0.1,
        "expected_clusters": None,
    },
    "contraction": {
        "orbits": 20,
        "n": 2000,
        "delta1": 0.05,
        "alpha": None,
        "safety": 4.0,
        "tol": 0.05,
        "vertices": 81,
        "times_per_orbit": 10,
        "min_times": 100,
    },
    "distortion": {
        "orbits": 4,
        "n": 10_000,
        "delta1": 0.05,
        "alpha": None,
        "safety": 4.0,
        "c2_constant": None,
        "calibration_time": 50,
        "calibration_window": 500,
        "vertices": 81,
        "times_per_orbit": 50,
        "grid_1d": 16,
        "pushforward_times": 10,
        "curvature_steps": 50,
        "delta1_samples": 20_000,
    },
}

EXPERIMENTS: Tuple[str, ...] = tuple(DEFAULTS)


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively overlay ``override`` on ``base``; lists and scalars replace."""
    merged: Dict[str, Any] = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def effective_config(
    experiment: str,
    user: Mapping[str, Any],
    *,
    seed: int,
    seed_override: Optional[int] = None,
) -> Dict[str, Any]:
    """Defaults for ``experiment`` overlaid with ``user``; ``noise.seed`` always resolved.

    ``seed_override`` (the CLI flag) beats the file; ``seed`` only fills a null.
    """
    if experiment not in DEFAULTS:
        raise DomainError(f"unknown experiment {experiment!r}")
    base = deep_merge(COMMON_DEFAULTS, {experiment: DEFAULTS[experiment]})
    merged = deep_merge(base, user)
    merged["experiment"] = experiment
    if seed_override is not None:
        merged["noise"]["seed"] = int(seed_override)
    elif merged["noise"].get("seed") is None:
        merged["noise"]["seed"] = int(seed)
    return merged


def build_map(map_cfg: Mapping[str, Any]) -> SelfMap:
    kind = map_cfg.get("kind", "da")
    if kind == "da":
        return make_da_map(DAParams.from_dict(map_cfg))
    if kind == "linear":
        return LinearAnosovMap(Mat2.from_rows(map_cfg.get("base", [2, 1, 1, 1])))
    if kind == "two-attractor":
        return TwoAttractorMap()
    raise DomainError(f"unknown map kind {kind!r}")


def emit_plot_data(
    curve: Sequence[Tuple[float, float]],
    path: Path,
    *,
    columns: Tuple[str, str] = ("x", "y"),
    png: bool = False,
) -> Path:
    """Two-column CSV (header plus one row per pair), optionally with a PNG beside it."""

    pairs = [(float(a), float(b)) for a, b in curve]
    if not pairs:
        raise DomainError("cannot emit an empty curve")
    frame = pd.DataFrame(pairs, columns=list(columns))

    def _write(fh: Any) -> None:
        frame.to_csv(fh, index=False, lineterminator="\n", float_format=FLOAT_FORMAT)

    atomic_write(path, _write, newline="\n", encoding="utf-8")
    if png:
        _save_plot(frame, path.with_suffix(".png"))
    return path


def _save_plot(frame: pd.DataFrame, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xcol, ycol = frame.columns
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(frame[xcol], frame[ycol], marker="o")
    ax.set_xlabel(xcol)
    ax.set_ylabel(ycol)
    ax.grid(True, alpha=0.3)
    try:
        fig.savefig(path, dpi=144, bbox_inches="tight")
    finally:
        plt.close(fig)


@dataclass
class ExperimentOutcome:
    headline: Dict[str, Any]
    hard: Dict[str, bool]
    soft: Dict[str, bool] = field(default_factory=dict)
    artifacts: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.hard.values())


@dataclass
class ExperimentContext:
    name: str
    config: Dict[str, Any]
    run: RunContext
    workers: int = 1
    plots: bool = False
    artifacts: List[str] = field(default_factory=list)

    @property
    def section(self) -> Dict[str, Any]:
        return self.config[self.name]

    @property
    def seed(self) -> int:
        return int(self.config["noise"]["seed"])

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(float(self.config["noise"]["epsilon"]))

    @property
    def plan(self) -> SeedPlan:
        return SeedPlan(self.seed, int(self.config["noise"]["streams"]))

    @property
    def map_kind(self) -> str:
        return str(self.config["map"]["kind"])

    def map(self) -> SelfMap:
        return build_map(self.config["map"])

    def torus_map(self) -> TorusMap:
        map_ = self.map()
        if not hasattr(map_, "splitting"):
            raise DomainError(
                f"experiment {self.name!r} needs a hyperbolic torus map, got kind={self.map_kind!r}"
            )
        return map_  # type: ignore[return-value]

    def cone(self, map_: TorusMap) -> ConeParams:
        cones = self.config["cones"]
        return ConeParams.for_splitting(map_.splitting, float(cones["width"]), float(cones["lambda"]))

    def orbit_rng(self, index: int) -> RngStream:
        return RngStream(self.seed, ORBIT_STREAM_BASE + index)

    def orbit(self, map_: TorusMap, index: int, n: int) -> RandomOrbit:
        """Orbit ``index`` of length ``n`` from a Lebesgue-random start on its own stream."""
        rng = self.orbit_rng(index)
        start = ensemble_starts(rng, 1)[0]
        return random_orbit(map_, self.noise, start, n, rng)

    def frame(self, name: str, frame: pd.DataFrame) -> None:
        write_frame(self.run, name, frame)
        self.artifacts.append(name)

    def binary(self, name: str, payload: bytes) -> None:
        write_bytes(self.run, name, payload)
        self.artifacts.append(name)

    def plot(self, name: str, curve: Sequence[Tuple[float, float]], columns: Tuple[str, str]) -> None:
        if not curve:
            return
        emit_plot_data(curve, self.run.artifact(name), columns=columns, png=self.plots)
        self.artifacts.append(name)

    def outcome(
        self,
        headline: Dict[str, Any],
        hard: Dict[str, bool],
        soft: Optional[Dict[str, bool]] = None,
    ) -> ExperimentOutcome:
        return ExperimentOutcome(
            headline,
            {k: bool(v) for k, v in hard.items()},
            {k: bool(v) for k, v in (soft or {}).items()},
            list(self.artifacts),
        )


def _spread(indices: np.ndarray, count: int) -> np.ndarray:
    """Up to ``count`` entries spread evenly over a sorted index array."""
    if indices.size <= count:
        return indices
    picks = np.unique(np.linspace(0, indices.size - 1, count).round().astype(int))
    return indices[picks]


def _pooled_alpha(traces: Sequence[CocycleTrace], safety: float) -> float:
    pooled = CocycleTrace(
        0,
        np.concatenate([t.log_norms for t in traces]),
        np.vstack([t.directions for t in traces]),
    )
    return choose_alpha(pooled, safety)


def _histogram_artifacts(ctx: ExperimentContext, stem: str, hist: GridHistogram) -> None:
    ctx.frame(f"{stem}.csv", hist.to_frame())
    ctx.binary(f"{stem}.bin", hist.to_bytes())


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------


def run_verify_map(ctx: ExperimentContext) -> ExperimentOutcome:
    sec = ctx.section
    map_ = ctx.torus_map()
    cone = ctx.cone(map_)
    report = verify_conditions(
        map_,
        cone.width,
        int(sec["grid_n"]),
        float(sec["lambda_target"]),
        delta0_max=float(sec["delta0_max"]),
    )
    violations = check_cone_invariance(
        map_, cone, ctx.noise.epsilon, int(sec["cone_samples"]), ctx.orbit_rng(0)
    )
    nondegeneracy = None
    if ctx.noise.epsilon > 0.0:
        nondegeneracy = check_nondegeneracy(
            map_,
            ctx.noise,
            sec["nondegeneracy_point"],
            int(sec["nondegeneracy_samples"]),
            ctx.orbit_rng(1),
        )

    settle = int(sec["settle"])
    orbit = ctx.orbit(map_, 2, 2 * settle + 1)
    direction = estimate_direction(map_, orbit, settle, settle)
    gap = domination_gap(map_, direction) if direction.converged else None

    ctx.frame(
        "violations.csv",
        pd.DataFrame(
            [{"x": p.x, "y": p.y, "tag": tag} for p, tag in report.violations]
            + [{"x": v.point.x, "y": v.point.y, "tag": f"noisy-{v.which}"} for v in violations],
            columns=["x", "y", "tag"],
        ),
    )
    headline = {
        **report.to_dict(),
        "cone_invariance_violations": len(violations),
        "nondegeneracy": nondegeneracy.to_dict() if nondegeneracy else None,
        "domination_gap_sample": gap,
        "direction_residual": direction.residual,
    }
    return ctx.outcome(
        headline,
        hard={
            "conditions": report.passed,
            "cone_invariance": not violations,
            "nondegeneracy": nondegeneracy.passed if nondegeneracy else True,
        },
        soft={"direction_converged": direction.converged},
    )


def run_pliss_demo(ctx: ExperimentContext) -> ExperimentOutcome:
    sec = ctx.section
    data = PlissInput.from_sequence(
        sec["values"], float(sec["c1"]), float(sec["c2"]), sec.get("H")
    )
    indices = pliss_select(data)
    ctx.frame("indices.csv", pd.DataFrame({"n": indices}))
    count = int(indices.size)
    bound = data.gamma_bound * data.values.size
    return ctx.outcome(
        {
            "indices": indices.tolist(),
            "count": count,
            "length": int(data.values.size),
            "gamma_bound": data.gamma_bound,
            "guaranteed_count": bound,
            "guarantee_applies": data.guarantee_applies,
        },
        hard={"cardinality": count >= bound if data.guarantee_applies else True},
    )


def run_hyp_times(ctx: ExperimentContext) -> ExperimentOutcome:
    sec = ctx.section
    map_ = ctx.torus_map()
    n, settle = int(sec["n"]), int(sec["settle"])
    orbit = ctx.orbit(map_, 0, n)
    trace = cocycle_log_norms(map_, orbit, settle)
    alpha = float(sec["alpha"]) if sec.get("alpha") is not None else choose_alpha(trace, float(sec["safety"]))
    report = detect_hyperbolic_times(trace, alpha)
    replay = all(verify_hyperbolic_time(trace.log_norms, int(k), alpha) for k in report.indices)
    looser = detect_hyperbolic_times(trace, math.sqrt(alpha))
    monotone = bool(np.isin(report.indices, looser.indices).all())

    ctx.frame("hyperbolic_times.csv", report.to_frame())
    ctx.frame("cocycle.csv", trace.to_frame())
    if sec.get("dump_orbit"):
        ctx.frame("orbit.csv", orbit_frame(orbit))

    hard = {"definition_replay": replay, "monotone_in_alpha": monotone}
    density = None
    if int(sec["ensemble"]) > 0:
        stats = estimate_density(
            map_, ctx.noise, int(sec["ensemble"]), n, alpha, ctx.plan, settle=settle, workers=ctx.workers
        )
        density = stats.to_dict()
        hard["density_q05_positive"] = stats.q05 > 0.0
    return ctx.outcome(
        {"trace": trace.summary(), "report": report.to_dict(), "ensemble_density": density},
        hard=hard,
    )


def run_rnue(ctx: ExperimentContext) -> ExperimentOutcome:
    sec = ctx.section
    map_ = ctx.torus_map()
    result = rnue_experiment(
        map_,
        ctx.noise,
        int(sec["ensemble"]),
        int(sec["n_steps"]),
        ctx.plan,
        settle=int(sec["settle"]),
        checkpoints=sec["checkpoints"],
        c_ladder=sec["c_ladder"],
        fail_c=sec.get("fail_c"),
        cs_orbits=int(sec["cs_orbits"]),
        workers=ctx.workers,
    )
    ctx.frame("orbit_averages.csv", pd.DataFrame({"orbit": np.arange(result.ensemble), "value": result.values}))
    ctx.frame("failing_fraction.csv", result.to_frame())
    ctx.plot(
        "plot_failing_fraction.csv",
        list(zip(result.checkpoints, result.failing_fractions())),
        ("n", "failing_fraction"),
    )
    summary = result.to_dict()
    hard = {"all_orbits_expanding": result.all_negative}
    if ctx.map_kind == "linear":
        rate = -math.log(abs(map_.splitting.lambda_u))
        hard["linear_rate"] = abs(summary["mean"] - rate) <= 1e-6
    soft = {
        "q05_below_minus_0.05": summary["q05"] <= -0.05,
        "failing_fraction_decays": result.fail_slope < 0.0 or max(result.failing_fractions()) == 0.0,
    }
    if summary["cs_max"] is not None:
        soft["cs_mostly_contracting"] = summary["cs_max"] < 0.0
    return ctx.outcome(summary, hard=hard, soft=soft)


def run_frequency(ctx: ExperimentContext) -> ExperimentOutcome:
    sec = ctx.section
    map_ = ctx.map()
    map_cfg = ctx.config["map"]
    center = sec["center"] if sec.get("center") is not None else map_cfg["center"]
    radius = float(sec["radius"]) if sec.get("radius") is not None else float(map_cfg["radius"])
    result = frequency_experiment(
        map_,
        ctx.noise,
        center,
        radius,
        int(sec["ensemble"]),
        sec["n_ladder"],
        ctx.plan,
        zeta_bad=sec.get("zeta_bad"),
        workers=ctx.workers,
    )
    ctx.frame("occupancy.csv", result.to_frame())
    ctx.plot(
        "plot_bad_fraction.csv",
        list(zip(result.n_ladder, result.bad_fractions())),
        ("n", "bad_fraction"),
    )
    summary: Dict[str, Any] = {
        **result.to_dict(),
        "center": [float(v) for v in wrap(center).reshape(2)],
        "radius": radius,
    }

    if ctx.map_kind != "two-attractor":
        cone_width = float(ctx.config["cones"]["width"])
        report = verify_conditions(map_, cone_width, int(sec["grid_n"]), float(ctx.config["cones"]["lambda"]))  # type: ignore[arg-type]
        bounds: Dict[str, Any] = {"sigma1": report.sigma1, "sigma2": report.sigma2, "delta0": report.delta0}
        try:
            bounds["max_admissible_zeta"] = max_admissible_zeta(report.sigma1, int(sec["partition_size"]))
            bounds["tail_rate"] = frequency_tail_rate(report.sigma1, int(sec["partition_size"]), result.zeta)
            bounds["expansion_rate"] = expansion_rate(report.sigma2, report.delta0, result.zeta)
        except DomainError as exc:
            _LOGGER.warning("frequency_bounds_skipped reason=%s", exc)
        summary["bounds"] = bounds

    bad = result.bad_fractions()
    hard = {"bad_set_decays": result.bad_slope < 0.0 or max(bad) == 0.0}
    if ctx.map_kind == "linear":
        expected = 1.0 - math.pi * radius**2
        summary["lebesgue_outside_fraction"] = expected
        hard["lebesgue_occupancy"] = abs(result.mean_fractions()[-1] - expected) <= 0.01
    return ctx.outcome(summary, hard=hard, soft={"zeta_above_half": result.zeta > 0.5})


def run_ulam(ctx: ExperimentContext) -> ExperimentOutcome:
    sec = ctx.section
    map_ = ctx.map()
    n = int(sec["grid_n"])
    plan = ctx.plan
    op = ulam_operator(
        map_, ctx.noise, n, int(sec["samples_per_cell"]), plan.stream(plan.streams), rounds=int(sec["rounds"])
    )
    tol = float(sec["tol"])
    density = stationary_density(op, tol, int(sec["max_iters"]))
    flat = density.mass.ravel()
    residual = float(np.abs(op.step(flat) - flat).sum())
    hist = ensemble_histogram(
        map_, ctx.noise, int(sec["ensemble"]), int(sec["n_steps"]), int(sec["burn_in"]), [n], plan, workers=ctx.workers
    )[n]
    uniform = GridHistogram.uniform(n)
    gap = l1_distance(density, hist)
    w1 = marginal_wasserstein(density, hist)

    _histogram_artifacts(ctx, "ulam_density", density)
    _histogram_artifacts(ctx, "histogram", hist)
    if sec.get("dump_matrix"):
        ctx.frame("ulam_matrix.csv", op.to_frame())

    headline = {
        "grid_n": n,
        "samples_per_cell": op.samples_per_cell,
        "fixed_point_residual": residual,
        "ulam_l1_uniform": l1_distance(density, uniform),
        "histogram_l1_uniform": l1_distance(hist, uniform),
        "estimator_l1": gap,
        "estimator_w1": list(w1),
        "column_sum_max_deviation": float(np.max(np.abs(op.column_sums() - 1.0))),
    }
    hard = {
        "fixed_point": residual < 2.0 * tol,
        "estimators_agree": gap <= float(sec["agreement_max"]),
    }
    if sec.get("uniform_max") is not None:
        hard["uniform_stationary"] = headline["ulam_l1_uniform"] <= float(sec["uniform_max"])
    return ctx.outcome(headline, hard=hard)


def run_stability(ctx: ExperimentContext) -> ExperimentOutcome:
    sec = ctx.section
    map_ = ctx.map()
    n = int(sec["grid_n"])
    refinement = [int(g) for g in sec["refinement"]]
    reference = srb_reference(
        map_,
        int(sec["reference_ensemble"]),
        int(sec["reference_steps"]),
        int(sec["burn_in"]),
        [n, *refinement],
        ctx.plan,
        workers=ctx.workers,
    )
    curve = stability_curve(
        map_,
        sec["epsilons"],
        reference[n],
        ensemble=int(sec["ensemble"]),
        n_steps=int(sec["n_steps"]),
        burn_in=int(sec["burn_in"]),
        plan=ctx.plan,
        refinement_references={g: reference[g] for g in refinement},
        ulam_samples=sec.get("ulam_samples"),
        workers=ctx.workers,
    )
    _histogram_artifacts(ctx, "reference", reference[n])
    ctx.frame("stability.csv", curve.to_frame())
    ctx.plot(
        "plot_stability.csv",
        [(p.epsilon, p.l1_distance) for p in curve.points],
        ("epsilon", "l1_distance"),
    )
    band = float(sec["band"])
    hard = {"nonincreasing": curve.nonincreasing(band)}
    if sec.get("max_l1") is not None:
        hard["max_l1"] = curve.max_l1 <= float(sec["max_l1"])
    return ctx.outcome(curve.to_dict(), hard=hard)


def run_basins(ctx: ExperimentContext) -> ExperimentOutcome:
    sec = ctx.section
    threshold = float(sec["threshold"])
    report = cluster_basins(
        ctx.map(),
        ctx.noise,
        int(sec["ensemble"]),
        int(sec["n_steps"]),
        int(sec["modes"]),
        threshold,
        ctx.plan,
        burn_in=int(sec["burn_in"]),
        workers=ctx.workers,
    )
    halved = int(cluster_labels(report.averages, threshold / 2.0).max())
    frame = pd.DataFrame(report.averages, columns=report.observables)
    frame.insert(0, "cluster", report.assignments)
    frame.insert(0, "orbit", np.arange(report.averages.shape[0]))
    ctx.frame("basins.csv", frame)
    hard: Dict[str, bool] = {}
    if sec.get("expected_clusters") is not None:
        hard["expected_clusters"] = report.clusters == int(sec["expected_clusters"])
    return ctx.outcome(
        {**report.to_dict(), "clusters_half_threshold": halved},
        hard=hard,
        soft={"stable_under_half_threshold": halved == report.clusters},
    )


def _curve_orbits(ctx: ExperimentContext, map_: TorusMap) -> Tuple[List[RandomOrbit], List[CocycleTrace], float]:
    sec = ctx.section
    orbits = [ctx.orbit(map_, i, int(sec["n"])) for i in range(int(sec["orbits"]))]
    traces = [cocycle_log_norms(map_, orbit, 0) for orbit in orbits]
    if sec.get("alpha") is not None:
        alpha = float(sec["alpha"])
    else:
        alpha = _pooled_alpha(traces, float(sec["safety"]))
    return orbits, traces, alpha


def run_contraction(ctx: ExperimentContext) -> ExperimentOutcome:
    sec = ctx.section
    map_ = ctx.torus_map()
    cone = ctx.cone(map_)
    orbits, traces, alpha = _curve_orbits(ctx, map_)
    delta1 = float(sec["delta1"])
    rows: List[Dict[str, Any]] = []
    for i, (orbit, trace) in enumerate(zip(orbits, traces)):
        times = _spread(detect_hyperbolic_times(trace, alpha).indices, int(sec["times_per_orbit"]))
        for t in times:
            report = check_backward_contraction(
                map_,
                orbit,
                trace,
                int(t),
                delta1,
                alpha,
                tol=float(sec["tol"]),
                vertices=int(sec["vertices"]),
                cone=cone,
            )
            rows.append({"orbit": i, **report.to_dict()})
    frame = pd.DataFrame(rows, columns=["orbit", "hyp_time", "alpha", "worst_ratio_over_bound", "passed"])
    ctx.frame("contraction.csv", frame)
    worst = float(frame["worst_ratio_over_bound"].max()) if rows else None
    return ctx.outcome(
        {"alpha": alpha, "delta1": delta1, "times_checked": len(rows), "worst_ratio_over_bound": worst},
        hard={
            "contraction": all(r["passed"] for r in rows),
            "enough_times": len(rows) >= int(sec["min_times"]),
        },
    )


def _curvature_seed(map_: TorusMap, cone: ConeParams, start: FloatArray, vertices: int = 41) -> FloatArray:
    """A bent cu-polyline of arclength about ``CHART_RADIUS`` centred on ``start``."""
    t = np.linspace(-CHART_RADIUS / 2.0, CHART_RADIUS / 2.0, vertices)
    bend = 0.5 * cone.width * t + t**2
    return start + t[:, None] * map_.splitting.e_u + bend[:, None] * map_.splitting.e_s


def _distortion_calibration(
    ctx: ExperimentContext,
    map_: TorusMap,
    cone: ConeParams,
    orbits: Sequence[RandomOrbit],
    traces: Sequence[CocycleTrace],
    alpha: float,
    delta1: float,
    c2: float,
) -> Optional[float]:
    """Largest ratio over every hyperbolic time in the calibration window, all orbits pooled."""
    sec = ctx.section
    lo = int(sec["calibration_time"])
    hi = lo + int(sec["calibration_window"])
    rows: List[Dict[str, Any]] = []
    for i, (orbit, trace) in enumerate(zip(orbits, traces)):
        times = detect_hyperbolic_times(trace, alpha).indices
        for t in times[(times >= lo) & (times < hi)]:
            report = check_distortion(
                map_, orbit, trace, int(t), delta1, c2, vertices=int(sec["vertices"]), cone=cone
            )
            rows.append({"orbit": i, "hyp_time": report.hyp_time, "max_ratio": report.max_ratio})
    ctx.frame("distortion_calibration.csv", pd.DataFrame(rows, columns=["orbit", "hyp_time", "max_ratio"]))
    if not rows:
        _LOGGER.warning("distortion_calibration_empty window=[%d,%d)", lo, hi)
        return None
    return max(r["max_ratio"] for r in rows)


def run_distortion(ctx: ExperimentContext) -> ExperimentOutcome:
    sec = ctx.section
    map_ = ctx.torus_map()
    cone = ctx.cone(map_)
    orbits, traces, alpha = _curve_orbits(ctx, map_)
    delta1 = float(sec["delta1"])
    c2 = (
        float(sec["c2_constant"])
        if sec.get("c2_constant") is not None
        else distortion_bound(map_, cone, delta1, alpha)
    )
    vertices = int(sec["vertices"])

    reports = []
    rows: List[Dict[str, Any]] = []
    selected: List[np.ndarray] = []
    for i, (orbit, trace) in enumerate(zip(orbits, traces)):
        times = _spread(detect_hyperbolic_times(trace, alpha).indices, int(sec["times_per_orbit"]))
        selected.append(times)
        for t in times:
            report = check_distortion(map_, orbit, trace, int(t), delta1, c2, vertices=vertices, cone=cone)
            reports.append(report)
            rows.append({"orbit": i, "hyp_time": report.hyp_time, "max_ratio": report.max_ratio, "pairs_checked": report.pairs_checked})
    ctx.frame("distortion.csv", pd.DataFrame(rows, columns=["orbit", "hyp_time", "max_ratio", "pairs_checked"]))
    ordered = sorted(reports, key=lambda r: r.hyp_time)
    ctx.plot("plot_distortion.csv", [(r.hyp_time, r.max_ratio) for r in ordered], ("hyp_time", "max_ratio"))
    trend = distortion_trend(reports)

    calibration = _distortion_calibration(ctx, map_, cone, orbits, traces, alpha, delta1, c2)
    late = [r for r in ordered if r.hyp_time >= int(sec["calibration_time"])]
    uniform = calibration is not None and all(
        r.max_ratio <= CALIBRATION_SLACK * calibration for r in late
    )

    pushforward = []
    if int(sec["pushforward_times"]) > 0 and selected and selected[0].size:
        pushforward = curve_pushforward_density(
            map_,
            orbits[0],
            traces[0],
            selected[0][: int(sec["pushforward_times"])],
            delta1,
            grid_1d=int(sec["grid_1d"]),
            c2_constant=c2,
            vertices=vertices,
            cone=cone,
        )
        ctx.frame(
            "pushforward.csv",
            pd.DataFrame(
                {
                    "hyp_time": [p.hyp_time for p in pushforward],
                    "density_ratio": [p.density_ratio for p in pushforward],
                    "bound": [p.bound for p in pushforward],
                }
            ),
        )

    soft: Dict[str, bool] = {}
    curvature = None
    if int(sec["curvature_steps"]) > 0:
        rng = ctx.orbit_rng(int(sec["orbits"]))
        start = ensemble_starts(rng, 1)[0]
        try:
            track = iterate_cu_curve(
                map_, ctx.noise, _curvature_seed(map_, cone, start), int(sec["curvature_steps"]), rng, cone
            )
        except ConeExitError as exc:
            _LOGGER.warning("curvature_cone_exit error=%s", exc)
            curvature = exc.to_dict()
            soft["curvature_bounded"] = False
        else:
            ctx.frame(
                "curvature.csv",
                pd.DataFrame({"iterate": np.arange(len(track.kappas)), "kappa": track.kappas}),
            )
            curvature = track.to_dict()
            soft["curvature_bounded"] = track.passed
    delta1_report = None
    if int(sec["delta1_samples"]) > 0:
        d1 = check_delta1(map_, cone, alpha, delta1, int(sec["delta1_samples"]), ctx.orbit_rng(int(sec["orbits"]) + 1))
        delta1_report = d1.to_dict()
        soft["delta1_continuity"] = d1.passed

    return ctx.outcome(
        {
            "alpha": alpha,
            "delta1": delta1,
            "c2_constant": c2,
            "times_checked": len(reports),
            "max_ratio": max((r.max_ratio for r in reports), default=None),
            "calibration_ratio": calibration,
            "uniformity_limit": None if calibration is None else CALIBRATION_SLACK * calibration,
            "trend": trend,
            "pushforward_max_ratio": max((p.density_ratio for p in pushforward), default=None),
            "curvature": curvature,
            "delta1_check": delta1_report,
        },
        hard={
            "bounded_by_c2": all(r.passed for r in reports),
            "calibrated_uniformity": uniform,
            "no_growth_trend": trend["ci_low"] <= 0.0 <= trend["ci_high"],
            "pushforward_bounded": all(p.passed for p in pushforward),
        },
        soft=soft,
    )


PIPELINES: Dict[str, Callable[[ExperimentContext], ExperimentOutcome]] = {
    "verify-map": run_verify_map,
    "pliss-demo": run_pliss_demo,
    "hyp-times": run_hyp_times,
    "rnue": run_rnue,
    "frequency": run_frequency,
    "ulam": run_ulam,
    "stability": run_stability,
    "basins": run_basins,
    "contraction": run_contraction,
    "distortion": run_distortion,
}


__all__ = [
    "COMMON_DEFAULTS",
    "DEFAULTS",
    "EXPERIMENTS",
    "ExperimentContext",
    "ExperimentOutcome",
    "PIPELINES",
    "build_map",
    "deep_merge",
    "effective_config",
    "emit_plot_data",
]
