from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Iterator, Optional, TypeVar

from app.core.config import settings

T = TypeVar("T")
R = TypeVar("R")


class OrderedPool:
    """Maps a pure function over items, yielding results in input order.

    With one worker everything runs lazily in-process, so callers that stop
    early never compute results they discard.
    """

    def __init__(self, workers: int = 1) -> None:
        self.workers = max(1, workers)
        self._executor: Optional[ProcessPoolExecutor] = None

    @property
    def batch_size(self) -> int:
        if self.workers == 1:
            return 1
        return self.workers * settings.BATCH_PER_WORKER

    def __enter__(self) -> "OrderedPool":
        if self.workers > 1:
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True, cancel_futures=True)
            self._executor = None

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> Iterator[R]:
        if self._executor is None:
            return map(fn, items)
        items = list(items)
        chunksize = max(1, len(items) // (self.workers * 4))
        return self._executor.map(fn, items, chunksize=chunksize)
