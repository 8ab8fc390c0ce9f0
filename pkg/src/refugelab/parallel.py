"""Ordered fan-out of independent work items."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "REFUGELAB_WORKERS"


def resolve_workers(workers: int | None = None) -> int:
    """Explicit count, else the environment override, else 1."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else 1
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def pmap(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, in input order, optionally over processes."""
    items = list(items)
    workers = resolve_workers(workers)
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))
