"""
Parallel Map
============
Ordered thread-pool map used by every stage that evaluates independent
work items (signals per direction, remove-one subsets, BT amplitudes).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """
    Apply `fn` to every item; results come back in input order.
    threads <= 1 runs inline.
    """
    items = list(items)
    workers = settings.threads if threads is None else threads
    workers = max(1, min(workers, len(items) or 1))

    if workers == 1:
        return [fn(item) for item in items]

    logger.debug(f"Mapping {len(items)} items on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
