"""
Module: engine/sweep.py
Description: Parallel map over independent sweep points. Results always come
             back in point order, whatever order the workers finish in.
Author: pwnedByJT
"""

import asyncio
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Sequence


async def run_sweep(fn: Callable[[Any], Any], points: Sequence[Any], jobs: int = 1) -> list:
    """
    `fn` must be picklable (module-level function or functools.partial of one)
    when jobs > 1. With jobs <= 1 everything runs inline on the event loop thread.
    """
    if not points:
        return []
    if jobs <= 1 or len(points) == 1:
        return [fn(p) for p in points]

    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=min(jobs, len(points))) as pool:
        futures = [loop.run_in_executor(pool, fn, p) for p in points]
        return list(await asyncio.gather(*futures))
