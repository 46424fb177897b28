"""
Ordered parallel map.

Grid nodes and per-example attacks are independent, so they may run in a
thread pool. Results always come back in input order, which keeps every
reduction over them deterministic regardless of completion order.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from src.config import settings

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    workers = settings.max_workers if workers is None else workers
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # Executor.map yields in submission order
        return list(pool.map(fn, items))
