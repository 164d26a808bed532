"""Linear Anosov base maps and the derived-from-Anosov (DA) family.

The DA map is ``f = A o g`` where ``A`` is an integer hyperbolic matrix and
``g`` is a radial shear supported on the ball ``V = B(center, radius)``::

    g(q) = q - s * psi(|w| / r) * <w, e_u> * e_u,   psi(t) = (1 - t^2)^3

with ``w`` the displacement from ``center`` to the nearest copy of ``q``.
``g`` moves points only along chords of ``V`` parallel to ``e_u`` and is
monotone on each chord while ``s < 1``, which is what makes the inverse a
one-dimensional root find.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Protocol

import numpy as np
from numpy.typing import ArrayLike

from ..errors import ConstructionError, DomainError, NumericalError
from .torus import FloatArray, Mat2, TorusPoint, as_points, wrap

_LOGGER = logging.getLogger(__name__)

CAT_MAP = Mat2(2.0, 1.0, 1.0, 1.0)
BUMP_EXPONENT = 3
# max_t |d/dt (t * psi(t))| for the cubic profile, attained at t = 0
SHEAR_SLOPE_BOUND = 1.0
NEWTON_MAX_ITERS = 100


@dataclass(frozen=True, eq=False)
class Splitting:
    """Eigen-splitting of a hyperbolic base matrix."""

    lambda_u: float
    lambda_s: float
    e_u: FloatArray
    e_s: FloatArray
    frame: FloatArray = field(init=False)
    frame_inv: FloatArray = field(init=False)

    def __post_init__(self) -> None:
        frame = np.column_stack([self.e_s, self.e_u])
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "frame_inv", np.linalg.inv(frame))

    def coordinates(self, v: ArrayLike) -> FloatArray:
        """Components ``(v_s, v_u)`` of ``v`` in the basis ``(e_s, e_u)``."""
        return as_points(v) @ self.frame_inv.T

    def to_eigen(self, matrices: ArrayLike) -> FloatArray:
        """Express planar matrices in the ``(e_s, e_u)`` basis."""
        return self.frame_inv @ np.asarray(matrices, dtype=float) @ self.frame


def _unit_eigenvector(base: Mat2, lam: float) -> FloatArray:
    if base.m12 != 0.0:
        v = np.array([base.m12, lam - base.m11])
    else:
        v = np.array([lam - base.m22, base.m21])
    return v / np.linalg.norm(v)


def hyperbolic_splitting(base: Mat2) -> Splitting:
    disc = base.trace**2 - 4.0 * base.det
    if disc <= 0.0:
        raise ConstructionError(f"base matrix has no real eigen-splitting disc={disc}")
    root = math.sqrt(disc)
    candidates = sorted(
        ((base.trace + root) / 2.0, (base.trace - root) / 2.0), key=abs, reverse=True
    )
    lam_u, lam_s = candidates
    if not (abs(lam_u) > 1.0 + 1e-12 and abs(lam_s) < 1.0 - 1e-12):
        raise ConstructionError(
            f"base matrix is not hyperbolic eigenvalues=({lam_u}, {lam_s})"
        )
    e_u = _unit_eigenvector(base, lam_u)
    e_s = _unit_eigenvector(base, lam_s)
    if e_u[0] < 0 or (e_u[0] == 0 and e_u[1] < 0):
        e_u = -e_u
    if e_s[1] < 0 or (e_s[1] == 0 and e_s[0] < 0):
        e_s = -e_s
    return Splitting(lam_u, lam_s, e_u, e_s)


def validate_base(base: Mat2) -> Splitting:
    if not base.is_integer():
        raise ConstructionError(f"base matrix must have integer entries: {base.rows()}")
    if abs(abs(base.det) - 1.0) > 0.0:
        raise ConstructionError(f"base matrix must be unimodular det={base.det}")
    return hyperbolic_splitting(base)


def inv2(matrices: ArrayLike) -> FloatArray:
    """Closed-form inverse of a stack of 2x2 matrices."""
    m = np.asarray(matrices, dtype=float)
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    out[..., 1, 1] = m[..., 0, 0]
    return out / det[..., None, None]


class SelfMap(Protocol):
    """Anything that can be iterated on the torus."""

    def apply(self, p: ArrayLike) -> FloatArray: ...

    def describe(self) -> Dict[str, Any]: ...


class TorusMap(SelfMap, Protocol):
    """Interface shared by the hyperbolic maps the laboratory analyses."""

    splitting: Splitting

    def apply_lift(self, p: ArrayLike) -> FloatArray: ...

    def jacobian(self, p: ArrayLike) -> FloatArray: ...

    def inverse_apply(self, p: ArrayLike) -> FloatArray: ...

    def displace(self, anchor: ArrayLike, d: ArrayLike) -> FloatArray: ...

    def in_region(self, p: ArrayLike) -> np.ndarray: ...


class LinearAnosovMap:
    """Toral automorphism induced by an integer hyperbolic matrix."""

    def __init__(self, base: Mat2 = CAT_MAP) -> None:
        self.base = base
        self.splitting = validate_base(base)
        self._matrix = base.as_array()
        self._inverse = base.adjugate().as_array() / base.det

    def apply_lift(self, p: ArrayLike) -> FloatArray:
        return as_points(p) @ self._matrix.T

    def apply(self, p: ArrayLike) -> FloatArray:
        return wrap(self.apply_lift(p))

    def jacobian(self, p: ArrayLike) -> FloatArray:
        pts = as_points(p)
        return np.broadcast_to(self._matrix, pts.shape[:-1] + (2, 2)).copy()

    def inverse_apply(self, p: ArrayLike) -> FloatArray:
        return wrap(as_points(p) @ self._inverse.T)

    def displace(self, anchor: ArrayLike, d: ArrayLike) -> FloatArray:
        return as_points(d) @ self._matrix.T

    def in_region(self, p: ArrayLike) -> np.ndarray:
        return np.zeros(as_points(p).shape[:-1], dtype=bool)

    def describe(self) -> Dict[str, Any]:
        return {"kind": "linear", "base": list(self.base.rows())}


@dataclass(frozen=True)
class DAParams:
    base: Mat2 = CAT_MAP
    center: TorusPoint = TorusPoint(0.0, 0.0)
    radius: float = 0.12
    strength: float = 0.63
    bump_exponent: int = BUMP_EXPONENT

    def __post_init__(self) -> None:
        validate_base(self.base)
        if self.bump_exponent != BUMP_EXPONENT:
            raise ConstructionError(
                f"only the cubic bump profile is supported, got {self.bump_exponent}"
            )
        if not (0.0 < self.radius < 0.5):
            raise ConstructionError(f"radius must lie in (0, 0.5), got {self.radius}")
        if not (0.0 <= self.strength and self.strength * SHEAR_SLOPE_BOUND < 1.0):
            raise ConstructionError(
                f"strength {self.strength} breaks invertibility of the shear "
                f"(need 0 <= s < {1.0 / SHEAR_SLOPE_BOUND})"
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "base": [int(v) for v in self.base.rows()],
            "center": [self.center.x, self.center.y],
            "radius": self.radius,
            "strength": self.strength,
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "DAParams":
        defaults = cls()
        base = payload.get("base")
        center = payload.get("center")
        return cls(
            base=Mat2.from_rows(base) if base is not None else defaults.base,
            center=(
                TorusPoint.from_raw(center) if center is not None else defaults.center
            ),
            radius=float(payload.get("radius", defaults.radius)),
            strength=float(payload.get("strength", defaults.strength)),
        )


class DAMap(LinearAnosovMap):
    """Derived-from-Anosov map ``A o g`` with the radial shear ``g`` on ``V``."""

    def __init__(self, params: DAParams) -> None:
        super().__init__(params.base)
        self.params = params
        self._center = params.center.as_array()
        self._r2 = params.radius**2
        self._s = params.strength
        self._e_u = self.splitting.e_u

    def _local(self, p: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray]:
        d = p - self._center
        w = d - np.round(d)
        pr = 1.0 - np.einsum("...i,...i->...", w, w) / self._r2
        u = w @ self._e_u
        return w, pr, u

    def shear(self, p: ArrayLike) -> FloatArray:
        """The deformation ``g`` in lift coordinates."""
        pts = as_points(p)
        if self._s == 0.0:
            return pts.copy()
        _, pr, u = self._local(pts)
        pc = np.clip(pr, 0.0, None)
        return pts - (self._s * pc**3 * u)[..., None] * self._e_u

    def apply_lift(self, p: ArrayLike) -> FloatArray:
        return self.shear(p) @ self._matrix.T

    def shear_jacobian(self, p: ArrayLike) -> FloatArray:
        pts = as_points(p)
        w, pr, u = self._local(pts)
        pc = np.clip(pr, 0.0, None)
        grad = (pc**3)[..., None] * self._e_u - (6.0 * pc**2 * u / self._r2)[
            ..., None
        ] * w
        eye = np.broadcast_to(np.eye(2), pts.shape[:-1] + (2, 2))
        return eye - self._s * np.einsum("i,...j->...ij", self._e_u, grad)

    def jacobian(self, p: ArrayLike) -> FloatArray:
        return self._matrix @ self.shear_jacobian(p)

    def shear_determinant(self, p: ArrayLike) -> FloatArray:
        _, pr, u = self._local(as_points(p))
        pc = np.clip(pr, 0.0, None)
        return 1.0 - self._s * (pc**3 - 6.0 * pc**2 * u**2 / self._r2)

    def inverse_apply(self, p: ArrayLike) -> FloatArray:
        y = as_points(p) @ self._inverse.T
        if self._s == 0.0:
            return wrap(y)
        w0, pr, u0 = self._local(y)
        inside = pr > 0.0
        if not np.any(inside):
            return wrap(y)
        perp2 = np.einsum("...i,...i->...", w0, w0) - u0**2
        v = _solve_chords(u0[inside], perp2[inside], self._s, self._r2)
        tau = np.zeros_like(u0)
        tau[inside] = v - u0[inside]
        return wrap(y + tau[..., None] * self._e_u)

    def displace(self, anchor: ArrayLike, d: ArrayLike) -> FloatArray:
        """Lift displacement ``f(anchor + d) - f(anchor)`` without cancellation."""
        q = as_points(anchor)
        dd = as_points(d)
        if self._s == 0.0:
            return dd @ self._matrix.T
        w, pr, u = self._local(q)
        du = dd @ self._e_u
        dpr = -(2.0 * np.einsum("...i,...i->...", w, dd)
                + np.einsum("...i,...i->...", dd, dd)) / self._r2
        pr2 = pr + dpr
        both_inside = (pr > 0.0) & (pr2 > 0.0)
        pc = np.clip(pr, 0.0, None)
        pc2 = np.clip(pr2, 0.0, None)
        exact = pc2**3 * du + dpr * (pc2**2 + pc2 * pc + pc**2) * u
        direct = pc2**3 * (u + du) - pc**3 * u
        dh = np.where(both_inside, exact, direct)
        return (dd - (self._s * dh)[..., None] * self._e_u) @ self._matrix.T

    def in_region(self, p: ArrayLike) -> np.ndarray:
        _, pr, _ = self._local(as_points(p))
        return pr > 0.0

    def describe(self) -> Dict[str, Any]:
        return {"kind": "da", **self.params.to_dict()}


def _solve_chords(
    u0: FloatArray, perp2: FloatArray, strength: float, r2: float
) -> FloatArray:
    """Solve ``v * (1 - s * P(v)^3) = u0`` on each chord of ``V``.

    ``P(v) = 1 - (perp2 + v^2) / r2``. The left side is increasing on the
    chord ``[-L, L]`` and fixes both endpoints, so Newton steps are safeguarded
    by bisection on that bracket.
    """

    half = np.sqrt(np.clip(r2 - perp2, 0.0, None))
    lo, hi = -half, half.copy()
    p0 = np.clip(1.0 - (perp2 + u0**2) / r2, 0.0, None)
    v = np.clip(u0 / (1.0 - strength * p0**3), lo, hi)
    tol = 8.0 * np.finfo(float).eps * math.sqrt(r2)
    residual = np.full_like(u0, np.inf)
    for iteration in range(NEWTON_MAX_ITERS):
        pr = np.clip(1.0 - (perp2 + v**2) / r2, 0.0, None)
        residual = v * (1.0 - strength * pr**3) - u0
        slope = 1.0 - strength * (pr**3 - 6.0 * pr**2 * v**2 / r2)
        hi = np.where(residual > 0.0, v, hi)
        lo = np.where(residual < 0.0, v, lo)
        step = residual / slope
        if np.all((np.abs(step) <= tol) | (residual == 0.0)):
            _LOGGER.debug("shear_inverse_converged iters=%d", iteration + 1)
            return v
        candidate = v - step
        outside = (candidate <= lo) | (candidate >= hi)
        v = np.where(outside, 0.5 * (lo + hi), candidate)
    raise NumericalError(
        f"shear inverse did not converge in {NEWTON_MAX_ITERS} iterations",
        residual=float(np.max(np.abs(residual))),
    )


def make_da_map(params: DAParams) -> DAMap:
    return DAMap(params)


def jacobian(map_: TorusMap, p: ArrayLike) -> FloatArray:
    return map_.jacobian(p)


def inverse_apply(map_: TorusMap, p: ArrayLike) -> FloatArray:
    return map_.inverse_apply(p)


__all__ = [
    "BUMP_EXPONENT",
    "CAT_MAP",
    "DAMap",
    "DAParams",
    "LinearAnosovMap",
    "Splitting",
    "SelfMap",
    "TorusMap",
    "hyperbolic_splitting",
    "inv2",
    "inverse_apply",
    "jacobian",
    "make_da_map",
    "validate_base",
]
