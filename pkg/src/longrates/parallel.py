"""Order-preserving map over work items, optionally on a thread pool.

Results are returned in input order no matter how many workers run, so any
pipeline built on :func:`pmap` produces identical output for every thread
count. Functions mapped here must be pure in the sense that their result
depends only on the argument, never on execution order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

A = TypeVar("A")
B = TypeVar("B")

__all__ = ["pmap"]


def pmap(fn: Callable[[A], B], items: Iterable[A], threads: int = 1) -> list[B]:
    """Map fn over items, preserving order; threads <= 1 runs serially."""
    if threads is None or threads <= 1:
        return [fn(x) for x in items]
    seq: Sequence[A] = list(items)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seq))
