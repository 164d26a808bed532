"""Closed-form rates for time spent off the deformation region."""

from __future__ import annotations

import math

from scipy.optimize import brentq

from ..errors import DomainError


def binary_entropy(zeta: float) -> float:
    """Natural-log binary entropy; ``H(0) = 0``."""
    if not 0.0 <= zeta <= 1.0:
        raise DomainError(f"zeta must lie in [0, 1], got {zeta}")
    if zeta in (0.0, 1.0):
        return 0.0
    return -zeta * math.log(zeta) - (1.0 - zeta) * math.log(1.0 - zeta)


def _log_tail_rate(sigma1: float, partition_size: int, zeta: float) -> float:
    return (
        binary_entropy(zeta)
        + zeta * math.log(partition_size)
        - (1.0 - zeta) * math.log(sigma1)
    )


def frequency_tail_rate(sigma1: float, partition_size: int, zeta: float) -> float:
    """``tau`` with ``Leb{x : fewer than zeta*n of n steps off V} <= tau**n``."""
    if sigma1 <= 1.0:
        raise DomainError(f"sigma1 must be > 1, got {sigma1}")
    if partition_size < 1:
        raise DomainError(f"partition_size must be >= 1, got {partition_size}")
    return math.exp(_log_tail_rate(sigma1, partition_size, zeta))


def max_admissible_zeta(sigma1: float, partition_size: int) -> float:
    """Largest ``zeta`` in ``(0, 1/2]`` with ``tau < 1`` (the root when one exists)."""
    if sigma1 <= 1.0:
        raise DomainError(f"sigma1 must be > 1, got {sigma1}")
    if partition_size < 1:
        raise DomainError(f"partition_size must be >= 1, got {partition_size}")
    upper = _log_tail_rate(sigma1, partition_size, 0.5)
    if upper < 0.0:
        return 0.5
    return float(brentq(lambda z: _log_tail_rate(sigma1, partition_size, z), 1e-12, 0.5, xtol=1e-14))


def expansion_rate(sigma2: float, eta: float, zeta: float) -> float:
    """``c = -(zeta log sigma2 + (1 - zeta) log(1 + eta))``."""
    if not 0.0 < sigma2 < 1.0:
        raise DomainError(f"sigma2 must lie in (0, 1), got {sigma2}")
    if eta < 0.0:
        raise DomainError(f"eta must be >= 0, got {eta}")
    if not 0.0 <= zeta <= 1.0:
        raise DomainError(f"zeta must lie in [0, 1], got {zeta}")
    return -(zeta * math.log(sigma2) + (1.0 - zeta) * math.log1p(eta))


__all__ = [
    "binary_entropy",
    "expansion_rate",
    "frequency_tail_rate",
    "max_admissible_zeta",
]
