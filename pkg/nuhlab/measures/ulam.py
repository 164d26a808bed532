"""Ulam discretisation of the one-step noisy transfer operator.

Cells are indexed ``row * n + col`` with ``row = floor(y n)`` and
``col = floor(x n)``, matching :class:`GridHistogram`. Each cell is sampled on
an ``m x m`` stratified lattice; every round pushes the whole lattice through
the map and one shared noise draw. The lattice of all cells is a translate of
``(1/(n m)) Z^2``, so for integer base matrices the images of every round put
exactly ``m^2`` points into every target cell.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import isqrt

import numpy as np
import pandas as pd
from scipy import sparse

from ..dynamics.maps import SelfMap
from ..dynamics.torus import FloatArray, wrap
from ..errors import DomainError, NumericalError
from ..noise.model import NoiseModel, RngStream, sample_noise
from .histogram import MASS_TOL, GridHistogram, cell_index

_LOGGER = logging.getLogger(__name__)

DEFAULT_ROUNDS = 16
MIN_GRID = 8
MIN_SAMPLES_PER_CELL = 16


@dataclass(frozen=True, eq=False)
class UlamOperator:
    n: int
    matrix: sparse.csr_matrix
    samples_per_cell: int = 0

    def __post_init__(self) -> None:
        size = self.n * self.n
        if self.matrix.shape != (size, size):
            raise DomainError(f"matrix shape {self.matrix.shape} does not match n={self.n}")
        if self.matrix.nnz and self.matrix.data.min() < 0.0:
            raise DomainError("transition matrix has negative entries")
        rows = np.asarray(self.matrix.sum(axis=1)).ravel()
        worst = float(np.max(np.abs(rows - 1.0)))
        if worst > MASS_TOL:
            raise DomainError(f"transition rows deviate from 1 by {worst!r}")

    def column_sums(self) -> FloatArray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()

    def step(self, density: FloatArray) -> FloatArray:
        """One push-forward ``h -> h P`` of a flat cell density."""
        return self.matrix.T @ density

    def to_frame(self) -> pd.DataFrame:
        """Sparse triplets ``(source, target, probability)``."""
        coo = self.matrix.tocoo()
        return pd.DataFrame({"source": coo.row, "target": coo.col, "probability": coo.data})


def cell_lattice(n: int, m: int) -> FloatArray:
    """``(n*m)^2`` points, ``m*m`` per cell, ordered by cell index."""
    offsets = (np.arange(m) + 0.5) / m
    rows, cols, b, a = np.meshgrid(np.arange(n), np.arange(n), offsets, offsets, indexing="ij")
    xs = (cols + a) / n
    ys = (rows + b) / n
    return np.column_stack([xs.ravel(), ys.ravel()])


def ulam_operator(
    map_: SelfMap,
    model: NoiseModel,
    n: int,
    samples_per_cell: int,
    rng: RngStream,
    *,
    rounds: int = DEFAULT_ROUNDS,
) -> UlamOperator:
    if n < MIN_GRID:
        raise DomainError(f"grid must be >= {MIN_GRID}, got {n}")
    if samples_per_cell < MIN_SAMPLES_PER_CELL:
        raise DomainError(
            f"samples_per_cell must be >= {MIN_SAMPLES_PER_CELL}, got {samples_per_cell}"
        )
    rounds = max(1, min(rounds, samples_per_cell))
    m = isqrt(samples_per_cell // rounds)
    used = rounds * m * m

    lattice = cell_lattice(n, m)
    images = map_.apply(lattice)
    sources = np.repeat(np.arange(n * n), m * m)
    weight = 1.0 / used
    targets = np.empty((rounds, sources.size), dtype=np.int64)
    for r in range(rounds):
        shift = sample_noise(model, rng)
        targets[r] = cell_index(wrap(images + shift), n)

    matrix = sparse.coo_matrix(
        (np.full(targets.size, weight), (np.tile(sources, rounds), targets.ravel())),
        shape=(n * n, n * n),
    ).tocsr()
    matrix.sum_duplicates()
    _LOGGER.info(
        "ulam_operator n=%d samples_per_cell=%d lattice=%d rounds=%d nnz=%d",
        n,
        used,
        m,
        rounds,
        matrix.nnz,
    )
    return UlamOperator(n, matrix, used)


def stationary_density(
    op: UlamOperator, tol: float = 1e-10, max_iters: int = 10_000
) -> GridHistogram:
    """Power iteration from the uniform density until the L1 step is below ``tol``."""

    size = op.n * op.n
    h = np.full(size, 1.0 / size)
    step = np.inf
    for it in range(1, max_iters + 1):
        nxt = op.step(h)
        nxt /= nxt.sum()
        step = float(np.abs(nxt - h).sum())
        h = nxt
        if step < tol:
            _LOGGER.info("ulam_converged iters=%d residual=%.3e", it, step)
            return GridHistogram(op.n, np.clip(h, 0.0, None).reshape(op.n, op.n) / h.sum())
    raise NumericalError(
        f"power iteration did not reach tol={tol} in {max_iters} iterations", residual=step
    )


__all__ = [
    "DEFAULT_ROUNDS",
    "UlamOperator",
    "cell_lattice",
    "stationary_density",
    "ulam_operator",
]
