"""Phase-space primitives for the two-torus R^2 / Z^2.

Points travel through the library as ``numpy`` arrays of shape ``(..., 2)``;
``TorusPoint`` is the scalar boundary type used in configs and reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import DomainError

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class TorusPoint:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x < 1.0 and 0.0 <= self.y < 1.0):
            raise DomainError(f"torus point outside [0,1)^2 x={self.x} y={self.y}")

    def as_array(self) -> FloatArray:
        return np.array([self.x, self.y], dtype=float)

    @classmethod
    def from_raw(cls, p: ArrayLike) -> "TorusPoint":
        x, y = wrap(p)
        return cls(float(x), float(y))


@dataclass(frozen=True)
class Mat2:
    m11: float
    m12: float
    m21: float
    m22: float

    @classmethod
    def from_rows(cls, entries: Sequence[float]) -> "Mat2":
        """Build from four row-major entries (the JSON ``base`` layout)."""
        if len(entries) != 4:
            raise DomainError(f"expected 4 row-major entries, got {len(entries)}")
        m11, m12, m21, m22 = (float(v) for v in entries)
        return cls(m11, m12, m21, m22)

    @classmethod
    def from_array(cls, array: ArrayLike) -> "Mat2":
        return cls.from_rows(np.asarray(array, dtype=float).reshape(4).tolist())

    def as_array(self) -> FloatArray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=float)

    def rows(self) -> Tuple[float, float, float, float]:
        return (self.m11, self.m12, self.m21, self.m22)

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def trace(self) -> float:
        return self.m11 + self.m22

    def is_integer(self) -> bool:
        return all(float(v).is_integer() for v in self.rows())

    def adjugate(self) -> "Mat2":
        return Mat2(self.m22, -self.m12, -self.m21, self.m11)


def as_points(p: ArrayLike) -> FloatArray:
    """Coerce input to a float array with trailing dimension 2."""
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1:] != (2,):
        raise DomainError(f"expected trailing dimension 2, got shape {arr.shape}")
    return arr


def wrap(p: ArrayLike) -> FloatArray:
    """Reduce planar coordinates mod 1 into [0, 1)."""
    arr = as_points(p)
    if not np.all(np.isfinite(arr)):
        raise DomainError("cannot wrap non-finite coordinates")
    out = arr - np.floor(arr)
    # x - floor(x) rounds up to exactly 1.0 for tiny negative x
    out[out >= 1.0] = 0.0
    return out


def apply_linear(base: Mat2, p: ArrayLike) -> FloatArray:
    """Image of ``p`` under the toral automorphism induced by ``base``."""
    return wrap(as_points(p) @ base.as_array().T)


def torus_delta(p: ArrayLike, q: ArrayLike) -> FloatArray:
    """Shortest lift displacement from ``p`` to ``q``."""
    d = as_points(q) - as_points(p)
    return d - np.round(d)


def torus_distance(p: ArrayLike, q: ArrayLike) -> FloatArray:
    return np.linalg.norm(torus_delta(p, q), axis=-1)


__all__ = [
    "FloatArray",
    "Mat2",
    "TorusPoint",
    "apply_linear",
    "as_points",
    "torus_delta",
    "torus_distance",
    "wrap",
]
