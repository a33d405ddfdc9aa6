"""Deterministic worker pool: ARRLIE_THREADS > 1 turns on threaded map.

Results always come back in input order, so every caller is byte-stable
regardless of thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    try:
        n = int(os.environ.get("ARRLIE_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def pmap(fn, items):
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) < 4:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
