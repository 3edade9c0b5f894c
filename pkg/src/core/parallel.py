"""Thread pool for independent realizations and panels.

Results are always collected in submission order, so reductions over them are
independent of scheduling.
"""

from __future__ import annotations

import sys
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from tqdm import tqdm

from ..utils.config import MAX_WORKERS
from ..utils.logger import logger

T = TypeVar("T")
R = TypeVar("R")


def _show_progress(progress: bool | None) -> bool:
    if progress is not None:
        return progress
    return sys.stderr.isatty()


def ordered_map(
    func: Callable[[T], R],
    items: Iterable[T],
    *,
    workers: int | None = None,
    desc: str | None = None,
    progress: bool | None = None,
) -> list[R]:
    """Apply ``func`` to every item and return the results in input order.

    ``workers`` defaults to ``MAX_WORKERS``; ``1`` runs inline. The first
    failing job is logged and its exception re-raised.
    """
    jobs = list(items)
    n_workers = max(1, workers or MAX_WORKERS)
    bar = tqdm(total=len(jobs), desc=desc, disable=not _show_progress(progress), leave=False)

    def _run(index: int, item: T) -> R:
        try:
            return func(item)
        except Exception:
            logger.exception("Job %d of %s failed", index, desc or "batch")
            raise
        finally:
            bar.update(1)

    try:
        if n_workers == 1 or len(jobs) <= 1:
            return [_run(i, item) for i, item in enumerate(jobs)]
        logger.debug("Running %d job(s) on %d worker(s)", len(jobs), n_workers)
        with ThreadPoolExecutor(max_workers=n_workers, thread_name_prefix="Worker") as pool:
            futures = [pool.submit(_run, i, item) for i, item in enumerate(jobs)]
            return [future.result() for future in futures]
    finally:
        bar.close()
