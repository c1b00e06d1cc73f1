"""Ordered task mapping with an optional thread pool."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional

__all__ = ["map_ordered", "default_threads"]


def default_threads() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def map_ordered(fn: Callable, items: Iterable, threads: Optional[int] = 1) -> list:
    """Apply ``fn`` to each item; results come back in input order."""
    items = list(items)
    n = default_threads() if threads is None else int(threads)
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
