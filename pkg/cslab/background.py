#!/usr/bin/env python
"""Worker pool for sweep samples.

Work is submitted to a process pool when more than one worker is asked for
and run inline otherwise; results always come back in submission order.
"""

import concurrent.futures
import multiprocessing
import os
from typing import Any, Callable, Iterable, Iterator, Optional


def default_n() -> int:
    "worker count from CSLAB_WORKERS, falling back to one"
    try:
        return max(1, int(os.environ["CSLAB_WORKERS"]))
    except (KeyError, ValueError):
        return 1


n = default_n()


def pool(workers: Optional[int] = None) -> concurrent.futures.Executor:
    workers = min(workers or n, multiprocessing.cpu_count())
    return concurrent.futures.ProcessPoolExecutor(max_workers=workers)


def run(f: Callable, items: Iterable[Any], workers: Optional[int] = None) -> Iterator[Any]:
    """
    Apply ``f`` to every item, yielding results in item order regardless of
    completion order.
    """
    workers = workers or n
    if workers <= 1:
        for item in items:
            yield f(item)
        return
    with pool(workers) as executor:
        futures = [executor.submit(f, item) for item in items]
        for future in futures:
            yield future.result()
