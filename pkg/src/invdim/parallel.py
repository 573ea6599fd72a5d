"""Schedule-independent chunked execution.

Work is split into fixed-size chunks whose boundaries never depend on the
worker count, and results come back in chunk order, so output is identical
for any value of ``INVDIM_THREADS``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

CHUNK = 8192


def worker_count() -> int:
    raw = os.environ.get("INVDIM_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def chunk_slices(total: int, size: int = CHUNK) -> list[slice]:
    return [slice(start, min(start + size, total)) for start in range(0, total, size)]


def ordered_map(fn, items) -> list:
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
