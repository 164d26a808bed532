"""Additive uniform-disk noise and deterministic RNG stream splitting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from numpy.random import PCG64, Generator

from ..errors import DomainError
from ..dynamics.torus import FloatArray

MASK64 = (1 << 64) - 1


def splitmix64(value: int) -> int:
    """One round of the SplitMix64 finalizer (Steele, Lea, Flood)."""
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_seed(seed: int, stream_id: int) -> int:
    return (int(seed) ^ splitmix64(int(stream_id))) & MASK64


@dataclass
class RngStream:
    """Single-owner random stream; never share one between workers."""

    seed: int
    stream_id: int = 0
    generator: Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not (0 <= int(self.seed) <= MASK64):
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream_id) < 0:
            raise DomainError(f"stream_id must be >= 0, got {self.stream_id}")
        self.generator = Generator(PCG64(stream_seed(self.seed, self.stream_id)))

    def random(self, shape: Tuple[int, ...]) -> FloatArray:
        return self.generator.random(shape)


@dataclass(frozen=True)
class SeedPlan:
    """Split an ensemble into per-stream contiguous chunks.

    Chunk sizes and stream seeds depend only on ``(seed, streams, size)`` so
    results never depend on how many worker processes execute the chunks.
    """

    seed: int
    streams: int = 1

    def __post_init__(self) -> None:
        if self.streams < 1:
            raise DomainError(f"streams must be >= 1, got {self.streams}")

    def chunks(self, size: int) -> List[int]:
        if size < 0:
            raise DomainError(f"ensemble size must be >= 0, got {size}")
        base, extra = divmod(size, self.streams)
        return [base + (1 if i < extra else 0) for i in range(self.streams)]

    def stream(self, stream_id: int) -> RngStream:
        return RngStream(self.seed, stream_id)


@dataclass(frozen=True)
class NoiseModel:
    """Uniform noise on the closed Euclidean disk of radius ``epsilon``."""

    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.epsilon) or self.epsilon < 0.0:
            raise DomainError(f"epsilon must be finite and >= 0, got {self.epsilon}")

    def admits(self, t: FloatArray) -> np.ndarray:
        """Whether noise vectors lie in the support of this model."""
        return np.linalg.norm(np.asarray(t, dtype=float), axis=-1) <= self.epsilon


def sample_noise(
    model: NoiseModel, rng: RngStream, size: Optional[int] = None
) -> FloatArray:
    """Polar sampling ``r = eps * sqrt(u)``, ``theta = 2 pi v``.

    Draws are consumed even at ``epsilon == 0`` so that streams stay aligned
    across noise levels.
    """

    shape = (1, 2) if size is None else (size, 2)
    uv = rng.random(shape)
    if model.epsilon == 0.0:
        out = np.zeros(shape)
    else:
        radius = model.epsilon * np.sqrt(uv[:, 0])
        theta = 2.0 * np.pi * uv[:, 1]
        out = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
        norms = np.hypot(out[:, 0], out[:, 1])
        over = norms > model.epsilon
        if np.any(over):
            out[over] *= (model.epsilon / norms[over] * (1.0 - 2.0**-52))[:, None]
    return out[0] if size is None else out


__all__ = [
    "MASK64",
    "NoiseModel",
    "RngStream",
    "SeedPlan",
    "sample_noise",
    "splitmix64",
    "stream_seed",
]
