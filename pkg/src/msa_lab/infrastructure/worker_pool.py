import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class ThreadReplicatePool:
    """Runs independent replicates; results come back in submission order."""

    def __init__(self, workers: int = 1):
        self.workers = max(1, workers)
        self._executor = ThreadPoolExecutor(max_workers=self.workers) if self.workers > 1 else None

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        if self._executor is None:
            return [fn(item) for item in items]
        return list(self._executor.map(fn, items))

    def close(self) -> None:
        if self._executor is not None:
            logger.debug("Shutting down replicate pool with %s workers", self.workers)
            self._executor.shutdown(wait=True)
            self._executor = None
