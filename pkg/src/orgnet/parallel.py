"""Order-preserving thread pool map used for per-team work."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def default_workers() -> int:
    env = os.environ.get("ORGNET_THREADS")
    if env:
        return max(1, int(env))
    return 1


def pmap(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, run on up to ``workers`` threads."""
    items = list(items)
    workers = workers or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))
