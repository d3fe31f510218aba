"""Run independent jobs on a thread pool, collecting results in job order."""

import asyncio
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
import logging
from typing import TypeVar

from .errors import InvalidInput

T = TypeVar("T")
R = TypeVar("R")

LOGGER = logging.getLogger(__package__).getChild("runner")


def batches(count: int, size: int) -> list[range]:
    """Split range(count) into consecutive ranges of at most `size` items."""
    size = max(1, size)
    return [range(start, min(start + size, count)) for start in range(0, count, size)]


async def run_jobs(func: Callable[[T], R], jobs: Sequence[T], threads: int = 1) -> list[R]:
    """
    Run func over jobs with at most `threads` workers.

    Results come back in the order of `jobs`, whatever order they finish in,
    so callers can aggregate them deterministically.
    """
    if threads < 1:
        raise InvalidInput(f"threads={threads} must be positive")
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures = [loop.run_in_executor(executor, func, job) for job in jobs]
        results = await asyncio.gather(*futures)
    LOGGER.debug("finished %s jobs on %s thread(s)", len(jobs), threads)
    return list(results)


def run_jobs_sync(func: Callable[[T], R], jobs: Sequence[T], threads: int = 1) -> list[R]:
    """Blocking wrapper around run_jobs for callers outside an event loop."""
    return asyncio.run(run_jobs(func, jobs, threads))
