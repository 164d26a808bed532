"""Linear-time Pliss index selection.

An index ``n`` (1-based) is selected when every window ending at ``n`` has
average at least ``c1``::

    sum_{j = m + 1}^{n} a_j >= c1 * (n - m)    for all 0 <= m < n.

With prefix sums ``S_k = sum_{j <= k} (a_j - c1)`` this is
``S_n >= max(S_0, ..., S_{n-1})``, a single running-maximum pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import DomainError


@dataclass(frozen=True, eq=False)
class PlissInput:
    values: NDArray[np.float64]
    c1: float
    c2: float
    H: float

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("Pliss input needs a non-empty 1-D sequence")
        if not np.all(np.isfinite(values)):
            raise DomainError("Pliss input contains non-finite values")
        if not (self.H >= self.c2 > self.c1):
            raise DomainError(
                f"Pliss constants need H >= c2 > c1, got H={self.H} c2={self.c2} c1={self.c1}"
            )
        if float(values.max()) > self.H:
            raise DomainError(f"value {values.max()} exceeds H={self.H}")

    @classmethod
    def from_sequence(
        cls, values: Sequence[float], c1: float, c2: float, H: float | None = None
    ) -> "PlissInput":
        arr = np.asarray(values, dtype=float)
        return cls(arr, c1, c2, float(arr.max()) if H is None else H)

    @property
    def gamma_bound(self) -> float:
        """Guaranteed density ``(c2 - c1) / (H - c1)``."""
        return (self.c2 - self.c1) / (self.H - self.c1)

    @property
    def guarantee_applies(self) -> bool:
        return float(self.values.sum()) >= self.c2 * self.values.size


def select_indices(values: ArrayLike, c1: float) -> NDArray[np.int64]:
    """Running-maximum selection without the Pliss constant checks."""
    shifted = np.asarray(values, dtype=float) - c1
    prefix = np.cumsum(shifted)
    previous_max = np.maximum.accumulate(np.concatenate([[0.0], prefix[:-1]]))
    return np.flatnonzero(prefix >= previous_max) + 1


def pliss_select(data: PlissInput) -> NDArray[np.int64]:
    """1-based indices satisfying every window inequality (ties included)."""
    return select_indices(data.values, data.c1)


__all__ = ["PlissInput", "pliss_select", "select_indices"]
