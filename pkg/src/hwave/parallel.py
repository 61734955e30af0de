"""Thread-count setting and an order-preserving parallel map.

NumPy releases the GIL inside large array operations, so a thread pool gives
real speedup for the per-entry work in this package.  Results are always
collected in input order, which keeps every reduction deterministic.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_threads: int | None = None


def set_threads(n: int | None) -> None:
    """Fix the worker count (``None`` restores the environment/default)."""
    global _threads
    if n is not None and int(n) < 1:
        raise ValueError("thread count must be positive")
    _threads = None if n is None else int(n)


def get_threads() -> int:
    if _threads is not None:
        return _threads
    env = os.environ.get("HWAVE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def thread_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """``[fn(x) for x in items]`` evaluated on the configured worker count."""
    items = list(items)
    n = get_threads()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
