"""Tracking of the one-dimensional bundles along stored and streamed orbits."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterator, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from ..dynamics.maps import TorusMap, inv2
from ..dynamics.torus import FloatArray, TorusPoint, wrap
from ..errors import DomainError, OrbitRangeError
from ..noise.model import NoiseModel, RngStream, sample_noise
from ..noise.orbits import RandomOrbit

_LOGGER = logging.getLogger(__name__)

DEFAULT_SETTLE = 30
CONVERGED_RESIDUAL = 1e-8


def line_angle(v: ArrayLike, w: ArrayLike) -> float:
    """Angle in ``[0, pi/2]`` between the lines spanned by two vectors."""
    v0, v1 = float(v[0]), float(v[1])  # type: ignore[index]
    w0, w1 = float(w[0]), float(w[1])  # type: ignore[index]
    theta = abs(math.atan2(v0 * w1 - v1 * w0, v0 * w0 + v1 * w1))
    return min(theta, math.pi - theta)


@dataclass(frozen=True, eq=False)
class DirectionEstimate:
    at: TorusPoint
    v_cu: FloatArray
    v_cs: FloatArray
    settle_steps: int
    residual: float

    @property
    def converged(self) -> bool:
        return self.residual < CONVERGED_RESIDUAL


def _push(matrices: FloatArray, seed: FloatArray) -> Tuple[FloatArray, float]:
    """Apply ``matrices`` in order to ``seed``, renormalising after each step."""
    v = seed / np.linalg.norm(seed)
    residual = 0.0
    for m in matrices:
        w = m @ v
        w = w / np.linalg.norm(w)
        residual = line_angle(v, w)
        v = w
    return v, residual


def estimate_direction(
    map_: TorusMap, orbit: RandomOrbit, index: int, settle: int = DEFAULT_SETTLE
) -> DirectionEstimate:
    """Settled ``E^cu`` (forward push of ``e_u``) and ``E^cs`` (backward push of ``e_s``)."""

    if settle < 0:
        raise DomainError(f"settle must be >= 0, got {settle}")
    if index - settle < 0 or index + settle > orbit.steps:
        raise OrbitRangeError(
            f"settle window [{index - settle}, {index + settle}] outside orbit [0, {orbit.steps}]"
        )
    splitting = map_.splitting
    forward = map_.jacobian(orbit.points[index - settle : index])
    v_cu, res_cu = _push(forward, splitting.e_u)
    backward = inv2(map_.jacobian(orbit.points[index : index + settle]))[::-1]
    v_cs, res_cs = _push(backward, splitting.e_s)
    return DirectionEstimate(
        at=TorusPoint(float(orbit.points[index, 0]), float(orbit.points[index, 1])),
        v_cu=v_cu,
        v_cs=v_cs,
        settle_steps=settle,
        residual=max(res_cu, res_cs),
    )


def domination_gap(map_: TorusMap, direction: DirectionEstimate) -> float:
    """``|Df v_cs| / |Df v_cu|`` at the estimate's base point."""
    if direction.residual >= 1e-6:
        raise DomainError(
            f"direction estimate not settled residual={direction.residual:.3e}"
        )
    jac = map_.jacobian(direction.at.as_array())
    return float(np.linalg.norm(jac @ direction.v_cs) / np.linalg.norm(jac @ direction.v_cu))


@dataclass(frozen=True, eq=False)
class CocycleTrace:
    """Per-step log-norms along an orbit.

    Entry ``i`` belongs to orbit step ``start + i``; ``directions[i]`` is the
    unit bundle vector at that step.
    """

    start: int
    log_norms: FloatArray
    directions: FloatArray

    def __len__(self) -> int:
        return int(self.log_norms.shape[0])

    @property
    def mean(self) -> float:
        return float(np.mean(self.log_norms)) if len(self) else float("nan")

    def orbit_index(self, n: int) -> int:
        """Orbit step reached after the first ``n`` trace steps."""
        return self.start + n

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "step": self.start + np.arange(len(self)),
                "a_j": self.log_norms,
                "vx": self.directions[:, 0],
                "vy": self.directions[:, 1],
            }
        )

    def summary(self) -> Dict[str, Any]:
        return {
            "start": self.start,
            "length": len(self),
            "mean": self.mean,
            "max": float(np.max(self.log_norms)) if len(self) else None,
            "min": float(np.min(self.log_norms)) if len(self) else None,
        }


def _forward_cocycle(
    jacobians: FloatArray, seed: FloatArray, settle: int
) -> Tuple[FloatArray, FloatArray]:
    entries = jacobians.reshape(-1, 4).tolist()
    vx, vy = float(seed[0]), float(seed[1])
    norm = math.hypot(vx, vy)
    vx, vy = vx / norm, vy / norm
    count = len(entries) - settle
    log_norms = np.empty(max(count, 0))
    directions = np.empty((max(count, 0), 2))
    for j, (m11, m12, m21, m22) in enumerate(entries):
        if j >= settle:
            directions[j - settle] = (vx, vy)
        wx = m11 * vx + m12 * vy
        wy = m21 * vx + m22 * vy
        norm = math.hypot(wx, wy)
        if j >= settle:
            log_norms[j - settle] = -math.log(norm)
        vx, vy = wx / norm, wy / norm
    return log_norms, directions


def cocycle_log_norms(
    map_: TorusMap,
    orbit: RandomOrbit,
    settle: int = DEFAULT_SETTLE,
    *,
    seed_direction: ArrayLike | None = None,
) -> CocycleTrace:
    """``a_j = -log |Df(points[j]) v_cu(j)|`` for ``j = settle .. steps - 1``.

    ``v_cu`` starts at ``e_u`` (or ``seed_direction``) on ``points[0]`` and is
    pushed and renormalised step by step.
    """

    if settle < 0 or orbit.steps <= settle:
        raise DomainError(f"orbit of {orbit.steps} steps is too short for settle={settle}")
    seed = (
        map_.splitting.e_u
        if seed_direction is None
        else np.asarray(seed_direction, dtype=float)
    )
    log_norms, directions = _forward_cocycle(
        map_.jacobian(orbit.points[:-1]), seed, settle
    )
    return CocycleTrace(settle, log_norms, directions)


def cs_log_norms(
    map_: TorusMap, orbit: RandomOrbit, settle: int = DEFAULT_SETTLE
) -> CocycleTrace:
    """``b_j = log |Df(points[j]) v_cs(j)|`` with ``v_cs`` pushed backward from the end.

    Only steps whose direction has been settled by at least ``settle``
    backward pushes are reported, so the trace covers ``j = 0 .. steps - settle - 1``.
    """

    if settle < 0 or orbit.steps <= settle:
        raise DomainError(f"orbit of {orbit.steps} steps is too short for settle={settle}")
    inverses = inv2(map_.jacobian(orbit.points[:-1]))
    # walking j = steps - 1 .. 0: entry k holds -log|Df_j^{-1} v(j + 1)| and v(j + 1)
    log_inv, ahead = _forward_cocycle(inverses[::-1], map_.splitting.e_s, 0)
    count = orbit.steps - settle
    b = log_inv[::-1][:count]
    v_next = ahead[::-1][:count]
    v_cs = np.einsum("nij,nj->ni", inverses[:count], v_next)
    v_cs /= np.linalg.norm(v_cs, axis=1, keepdims=True)
    return CocycleTrace(0, np.ascontiguousarray(b), v_cs)


def ensemble_cocycle_steps(
    map_: TorusMap,
    model: NoiseModel,
    x0: ArrayLike,
    n: int,
    settle: int,
    rng: RngStream,
) -> Iterator[Tuple[int, FloatArray, FloatArray]]:
    """Stream ``(j, points_j, a_j)`` for ``j = settle .. n - 1`` over a whole ensemble.

    Orbits and noises are consumed exactly as :func:`noise.orbits.ensemble_steps`
    would, so orbit ``i`` of the ensemble matches a stored orbit drawn from
    the same stream when the ensemble has a single member.
    """

    x = wrap(x0)
    size = x.shape[0]
    v = np.broadcast_to(map_.splitting.e_u, (size, 2)).copy()
    for j in range(n):
        jac = map_.jacobian(x)
        w = np.einsum("nij,nj->ni", jac, v)
        norms = np.linalg.norm(w, axis=1)
        if j >= settle:
            yield j, x, -np.log(norms)
        v = w / norms[:, None]
        x = wrap(map_.apply(x) + sample_noise(model, rng, size=size))


__all__ = [
    "CONVERGED_RESIDUAL",
    "CocycleTrace",
    "DEFAULT_SETTLE",
    "DirectionEstimate",
    "cocycle_log_norms",
    "cs_log_norms",
    "domination_gap",
    "ensemble_cocycle_steps",
    "estimate_direction",
    "line_angle",
]
