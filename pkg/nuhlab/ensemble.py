"""Stream-parallel execution of ensemble chunks.

One job per RNG stream. With a single worker the jobs run in-process;
otherwise they are mapped over a ``multiprocessing.Pool``. Results always come
back in ascending ``stream_id`` order so reductions are deterministic.
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Any, Callable, Dict, Iterator, List, Sequence, TypeVar

from .errors import DomainError
from .noise.model import RngStream, SeedPlan

_LOGGER = logging.getLogger(__name__)

R = TypeVar("R")


@dataclass(frozen=True)
class StreamJob:
    seed: int
    stream_id: int
    size: int
    params: Dict[str, Any] = field(default_factory=dict)

    def rng(self) -> RngStream:
        return RngStream(self.seed, self.stream_id)


def plan_jobs(plan: SeedPlan, size: int, **params: Any) -> List[StreamJob]:
    """Jobs for every non-empty chunk of an ensemble of ``size`` members."""
    return [
        StreamJob(plan.seed, stream_id, chunk, dict(params))
        for stream_id, chunk in enumerate(plan.chunks(size))
        if chunk > 0
    ]


@contextmanager
def _pool_context_manager(n_process: int) -> Iterator[Any]:
    """Process pool that exits with close/join rather than terminate."""
    pool = Pool(n_process)
    try:
        yield pool
    finally:
        pool.close()
        pool.join()


def run_streams(
    task: Callable[[StreamJob], R], jobs: Sequence[StreamJob], workers: int = 1
) -> List[R]:
    """Run ``task`` on every job; ``task`` must be a picklable top-level function."""

    if workers < 1:
        raise DomainError(f"workers must be >= 1, got {workers}")
    ordered = sorted(jobs, key=lambda job: job.stream_id)
    n_process = min(workers, len(ordered))
    _LOGGER.debug("run_streams jobs=%d workers=%d", len(ordered), n_process)
    if n_process <= 1:
        return [task(job) for job in ordered]
    with _pool_context_manager(n_process) as pool:
        return list(pool.map(task, ordered))


__all__ = ["StreamJob", "plan_jobs", "run_streams"]
