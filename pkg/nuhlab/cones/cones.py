"""Constant-width cone fields around the base eigen-splitting.

Vectors are decomposed as ``v = v_s e_s + v_u e_u``. The centre-unstable cone
of width ``a`` is ``|v_s| <= a |v_u|`` and the centre-stable cone is
``|v_u| <= a |v_s|``; both are closed. Because the cones do not depend on the
base point and the bundles are one-dimensional, the image of a cone is the
sector spanned by the images of its two extremal vectors, which is what the
invariance checks below test.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Tuple

import numpy as np
from numpy.typing import ArrayLike

from ..dynamics.maps import Splitting, TorusMap, inv2
from ..dynamics.torus import FloatArray, TorusPoint, wrap
from ..errors import DomainError
from ..noise.model import NoiseModel, RngStream, sample_noise

_LOGGER = logging.getLogger(__name__)

ConeKind = Literal["cu", "cs"]
_BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class ConeParams:
    width: float
    e_u: FloatArray
    e_s: FloatArray
    lambda_: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 < self.width < 1.0):
            raise DomainError(f"cone width must lie in (0, 1), got {self.width}")
        if not (0.0 < self.lambda_ < 1.0):
            raise DomainError(f"domination constant must lie in (0, 1), got {self.lambda_}")
        for name, vec in (("e_u", self.e_u), ("e_s", self.e_s)):
            if abs(float(np.linalg.norm(vec)) - 1.0) > 1e-12:
                raise DomainError(f"{name} must be a unit vector, got {vec}")
        if abs(self.e_s[0] * self.e_u[1] - self.e_s[1] * self.e_u[0]) < 1e-12:
            raise DomainError("e_u and e_s must be linearly independent")

    @classmethod
    def for_splitting(
        cls, splitting: Splitting, width: float, lambda_: float = 0.5
    ) -> "ConeParams":
        return cls(width, splitting.e_u, splitting.e_s, lambda_)

    @property
    def frame_inv(self) -> FloatArray:
        return np.linalg.inv(np.column_stack([self.e_s, self.e_u]))

    def coordinates(self, v: ArrayLike) -> FloatArray:
        return np.asarray(v, dtype=float) @ self.frame_inv.T

    def extremal_vectors(self, which: ConeKind) -> FloatArray:
        """The two boundary rays of the cone, as planar vectors."""
        a = self.width
        if which == "cu":
            return np.array([a * self.e_s + self.e_u, -a * self.e_s + self.e_u])
        return np.array([self.e_s + a * self.e_u, self.e_s - a * self.e_u])


def cone_mask(coords: FloatArray, width: float, which: ConeKind) -> np.ndarray:
    v_s, v_u = coords[..., 0], coords[..., 1]
    inner, outer = (v_s, v_u) if which == "cu" else (v_u, v_s)
    slack = _BOUNDARY_RTOL * (np.abs(inner) + np.abs(outer))
    return np.abs(inner) <= width * np.abs(outer) + slack


def in_cone(v: ArrayLike, cone: ConeParams, which: ConeKind) -> bool:
    vec = np.asarray(v, dtype=float)
    if vec.shape != (2,) or not np.any(vec):
        raise DomainError(f"in_cone needs a nonzero planar vector, got {vec!r}")
    return bool(cone_mask(cone.coordinates(vec), cone.width, which))


def sector_image_ok(images: FloatArray, width: float, which: ConeKind) -> np.ndarray:
    """Whether the sector spanned by two extremal images stays in the cone.

    ``images`` has shape ``(..., 2, 2)``: two image vectors in eigen
    coordinates. Both must lie in the cone and in the same nappe.
    """

    inside = cone_mask(images, width, which).all(axis=-1)
    axis = 1 if which == "cu" else 0
    same_nappe = images[..., 0, axis] * images[..., 1, axis] > 0.0
    return inside & same_nappe


def eigen_cone_checks(
    matrices_eigen: FloatArray, width: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Cone invariance for Jacobians already expressed in ``(e_s, e_u)``.

    Returns ``(cu_ok, cs_ok)``: ``M C_cu subset C_cu`` and
    ``M^{-1} C_cs subset C_cs`` per matrix.
    """

    a = width
    cu_rays = np.array([[a, 1.0], [-a, 1.0]])
    cs_rays = np.array([[1.0, a], [1.0, -a]])
    cu_images = np.einsum("...ij,kj->...ki", matrices_eigen, cu_rays)
    cs_images = np.einsum("...ij,kj->...ki", inv2(matrices_eigen), cs_rays)
    return sector_image_ok(cu_images, a, "cu"), sector_image_ok(cs_images, a, "cs")


def cu_min_stretch(matrices_eigen: FloatArray, width: float) -> FloatArray:
    """Minimal ``e_u``-component growth over unit-``e_u`` cu-cone vectors."""
    m_us = matrices_eigen[..., 1, 0]
    m_uu = matrices_eigen[..., 1, 1]
    plus = m_uu + width * m_us
    minus = m_uu - width * m_us
    return np.where(plus * minus > 0.0, np.minimum(np.abs(plus), np.abs(minus)), 0.0)


def cs_max_stretch(matrices_eigen: FloatArray, width: float) -> FloatArray:
    """Maximal ``e_s``-component growth over unit-``e_s`` cs-cone vectors."""
    return np.abs(matrices_eigen[..., 0, 0]) + width * np.abs(matrices_eigen[..., 0, 1])


@dataclass(frozen=True)
class ConeViolation:
    point: TorusPoint
    noise: Tuple[float, float]
    which: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.point.x,
            "y": self.point.y,
            "tx": self.noise[0],
            "ty": self.noise[1],
            "cone": self.which,
        }


def check_cone_invariance(
    map_: TorusMap,
    cone: ConeParams,
    noise_radius: float,
    samples: int,
    rng: RngStream,
) -> List[ConeViolation]:
    """Random-sample check of ``Df_t C_cu(x) in C_cu(f_t x)`` and the cs dual.

    Additive noise does not change the derivative, but the target point
    ``f_t x`` is still drawn so that the report records where each failing
    sample lands.
    """

    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    points = wrap(rng.random((samples, 2)))
    noises = sample_noise(NoiseModel(noise_radius), rng, size=samples)
    jac = map_.jacobian(points)
    frame_inv = cone.frame_inv

    cu_images = np.einsum("nij,kj->nki", jac, cone.extremal_vectors("cu")) @ frame_inv.T
    cs_images = (
        np.einsum("nij,kj->nki", inv2(jac), cone.extremal_vectors("cs")) @ frame_inv.T
    )
    cu_ok = sector_image_ok(cu_images, cone.width, "cu")
    cs_ok = sector_image_ok(cs_images, cone.width, "cs")

    violations: List[ConeViolation] = []
    for which, ok in (("cu", cu_ok), ("cs", cs_ok)):
        for idx in np.flatnonzero(~ok):
            violations.append(
                ConeViolation(
                    TorusPoint(float(points[idx, 0]), float(points[idx, 1])),
                    (float(noises[idx, 0]), float(noises[idx, 1])),
                    which,
                )
            )
    _LOGGER.info(
        "cone_invariance samples=%d width=%s violations=%d",
        samples,
        cone.width,
        len(violations),
    )
    return violations


__all__ = [
    "ConeKind",
    "ConeParams",
    "ConeViolation",
    "check_cone_invariance",
    "cone_mask",
    "cs_max_stretch",
    "cu_min_stretch",
    "eigen_cone_checks",
    "in_cone",
    "sector_image_ok",
]
