"""Exception hierarchy shared by the numerical modules and the CLI."""

from __future__ import annotations


class NuhLabError(Exception):
    """Base class for every error raised by the package."""


class DomainError(NuhLabError, ValueError):
    """A precondition on the inputs of an operation does not hold."""


class ConstructionError(DomainError):
    """Map parameters cannot produce a valid diffeomorphism."""


class OrbitRangeError(DomainError, IndexError):
    """A settling window reaches past either end of a stored orbit."""


class NumericalError(NuhLabError, RuntimeError):
    """An iterative computation failed to reach its tolerance."""

    def __init__(self, message: str, *, residual: float | None = None) -> None:
        super().__init__(message)
        self.residual = residual

    def to_dict(self) -> dict[str, object]:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "residual": self.residual,
        }


class ConeExitError(NumericalError):
    """An iterated cu-curve produced a tangent outside the cu cone."""


__all__ = [
    "ConeExitError",
    "ConstructionError",
    "DomainError",
    "NumericalError",
    "NuhLabError",
    "OrbitRangeError",
]
