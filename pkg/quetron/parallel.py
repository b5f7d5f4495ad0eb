"""Ordered map over grid points, optionally in worker processes."""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from tqdm import tqdm

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(
    func: Callable[[T], R],
    items: Iterable[T],
    workers: int = 1,
    desc: str = "",
    progress: bool = False
) -> List[R]:
    """Apply ``func`` to every item and return the results in input order.

    Args:
        func: Picklable callable (a module-level function or a partial of one)
        items: Inputs
        workers: Process count; 1 runs in the calling process
        desc: Progress bar label
        progress: Show a tqdm bar on stderr

    Returns:
        List of results, one per item
    """
    items = list(items)
    if workers > 1 and len(items) > 1:
        logger.debug("dispatching %d %s tasks to %d workers", len(items), desc, workers)
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = executor.map(func, items)
            return list(tqdm(results, total=len(items), desc=desc, disable=not progress))
    return [func(item) for item in tqdm(items, desc=desc, disable=not progress)]
