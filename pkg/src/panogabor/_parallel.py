"""Thread-count handling. Work is split into independent chunks whose
results never depend on how many workers ran them."""

import os
from concurrent.futures import ThreadPoolExecutor


def num_threads():
    """Worker cap from ``PGF_THREADS`` (default 1)."""
    raw = os.environ.get("PGF_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def parallel_map(fn, items):
    items = list(items)
    n = min(num_threads(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
