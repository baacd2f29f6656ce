"""Worker-count policy and a tiny ordered parallel map.

Independent validation instances (sandwich checks across refinement levels,
oracle batches) are embarrassingly parallel; the ``HYPODIST_THREADS``
environment variable caps how many worker threads they may use.  Unset,
empty, or "1" keeps everything sequential.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor

logger = logging.getLogger(__name__)

_ENV_VAR = "HYPODIST_THREADS"
_MAX_THREADS = 64


def thread_count() -> int:
    """Worker cap from the environment; 1 when unset or unusable."""
    raw = os.environ.get(_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", _ENV_VAR, raw)
        return 1
    if n < 1:
        logger.warning("ignoring non-positive %s=%d", _ENV_VAR, n)
        return 1
    return min(n, _MAX_THREADS)


def parallel_map(fn, items) -> list:
    """Apply ``fn`` over ``items`` preserving order, threading when allowed."""
    items = list(items)
    workers = min(thread_count(), len(items)) if items else 1
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
