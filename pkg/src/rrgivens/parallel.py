"""Shared-memory worker pools and the fixed-shape row reduction.

Each parallel phase splits the active pairs of a block into contiguous
chunks, one per worker, runs them on a thread pool and waits for all of
them before returning.  That wait is the barrier between phases and
between blocks.  numpy releases the GIL inside the gather/scatter
arithmetic, so the threads do overlap on multicore machines.
"""
from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .schedule import ParameterError

_pools: dict[int, ThreadPoolExecutor] = {}
_lock = threading.Lock()


def max_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def resolve_workers(workers: int | None) -> int:
    """``None`` means every available core; otherwise a positive count."""
    if workers is None:
        return max_workers()
    if int(workers) != workers or workers < 1:
        raise ParameterError(f"workers must be a positive integer, got {workers!r}")
    return int(workers)


def _pool(workers: int) -> ThreadPoolExecutor:
    with _lock:
        pool = _pools.get(workers)
        if pool is None:
            pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="rrgivens")
            _pools[workers] = pool
        return pool


def chunk_bounds(n_items: int, workers: int) -> list[tuple[int, int]]:
    """Split ``range(n_items)`` into at most ``workers`` contiguous, non-empty chunks."""
    k = max(1, min(workers, n_items))
    edges = np.linspace(0, n_items, k + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


class BlockRunner:
    """Runs ``fn(lo, hi)`` over chunks of a block and waits for completion."""

    def __init__(self, workers: int | None = 1):
        self.workers = resolve_workers(workers)
        self._pool = _pool(self.workers) if self.workers > 1 else None

    def run(self, fn: Callable[[int, int], None], n_items: int) -> None:
        if n_items == 0:
            return
        if self._pool is None or n_items == 1:
            fn(0, n_items)
            return
        futures = [self._pool.submit(fn, lo, hi) for lo, hi in chunk_bounds(n_items, self.workers)]
        for f in futures:
            f.result()


def tree_row_sum(a: np.ndarray) -> np.ndarray:
    """Sum each row of ``a`` with a fixed pairwise tree.

    Neighbouring columns are added level by level; an odd trailing column is
    padded with zero.  The association order depends only on the row length,
    so the result does not depend on thread count or on numpy's own
    summation blocking.
    """
    a = np.asarray(a)
    if a.ndim != 2:
        raise ParameterError("tree_row_sum expects a 2-D array")
    if a.shape[1] == 0:
        return np.zeros(a.shape[0], dtype=a.dtype)
    while a.shape[1] > 1:
        if a.shape[1] % 2:
            a = np.concatenate([a, np.zeros((a.shape[0], 1), dtype=a.dtype)], axis=1)
        a = a[:, 0::2] + a[:, 1::2]
    return a[:, 0].copy()


def tree_row_sum_parallel(a: np.ndarray, runner: BlockRunner) -> np.ndarray:
    """Row-chunked :func:`tree_row_sum`; bitwise equal to the serial version."""
    out = np.empty(a.shape[0], dtype=a.dtype)

    def work(lo, hi):
        out[lo:hi] = tree_row_sum(a[lo:hi])

    runner.run(work, a.shape[0])
    return out
