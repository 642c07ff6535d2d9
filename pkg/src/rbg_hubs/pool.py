from __future__ import annotations
"""Fixed-chunk replication pool.

Replications are cut into chunks of CHUNK_SIZE whatever the worker count,
each chunk is evaluated by a module-level (picklable) function, and results
come back in chunk order. Aggregates therefore never depend on scheduling.
"""
import logging
import multiprocessing
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

from . import config

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def chunk_ranges(total: int, size: int = config.CHUNK_SIZE) -> List[Tuple[int, int]]:
    if total < 0 or size < 1:
        raise ValueError("total must be >= 0 and chunk size >= 1")
    return [(start, min(start + size, total)) for start in range(0, total, size)]


def map_chunks(fn: Callable[[T], R], tasks: Sequence[T], workers: Optional[int] = None) -> List[R]:
    workers = config.default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    log.debug("dispatching %d chunks to %d workers", len(tasks), workers)
    with multiprocessing.Pool(min(workers, len(tasks))) as pool:
        return list(pool.imap(fn, tasks))


__all__ = ["chunk_ranges", "map_chunks"]
