from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import structlog

log = structlog.get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def map_items(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """
    Apply fn to every batch item, keeping input order. Items share no mutable
    state so they can run on separate worker threads.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    workers = min(threads, len(items))
    log.debug("mapping batch on worker threads", items=len(items), workers=workers)
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="protkin-batch") as pool:
        return list(pool.map(fn, items))
