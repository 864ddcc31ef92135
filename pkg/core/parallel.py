"""Order-preserving parallel map over independent numerical jobs."""

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

from config.settings import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(max_workers: int | None = None) -> int:
    """Return the worker count: an explicit request, else CAVITY_LB_THREADS."""
    if max_workers is None:
        return get_settings().cavity_lb_threads
    return max(1, max_workers)


def parallel_map(
    func: Callable[[T], R],
    items: Iterable[T],
    max_workers: int | None = None,
) -> list[R]:
    """Apply ``func`` to every item, in input order.

    Runs in a process pool when more than one worker is allowed, otherwise
    sequentially in the calling process. ``func`` must be picklable (a module
    level function or a functools.partial of one).

    Args:
        func: Function applied to each item
        items: Inputs
        max_workers: Worker count; defaults to CAVITY_LB_THREADS

    Returns:
        Results in the same order as ``items``
    """
    items = list(items)
    workers = min(resolve_workers(max_workers), len(items))
    if workers <= 1:
        return [func(item) for item in items]

    logger.debug(f"Running {len(items)} jobs on {workers} worker processes")
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))
