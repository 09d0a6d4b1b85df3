import os
import threading
from concurrent.futures import Executor, ProcessPoolExecutor
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, TypeVar


T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    """
    Number of logical CPUs.

    On machines with simultaneous multithreading this exceeds the physical
    core count; pass ``--workers`` to run one worker per physical core.
    """
    return os.cpu_count() or 1


class WorkerPool:
    """
    Fan-out of independent evaluation tasks.

    :param max_size: number of worker processes. ``None`` uses every logical CPU;
      ``1`` runs tasks inline in the calling process.

    Tasks must be picklable module-level callables and arguments. ``map``
    keeps task order, so a reduction over its output does not depend on
    which worker finished first.
    """

    def __init__(self, max_size: Optional[int] = None) -> None:
        if max_size is not None and max_size < 1:
            raise ValueError(f"max_size must be positive, got {max_size}")
        self._max_size = max_size or default_workers()
        self._lock = threading.Lock()
        self._executor: Optional[Executor] = None

    @property
    def max_size(self) -> int:
        return self._max_size

    @contextmanager
    def get(self) -> Iterator[Executor]:
        with self._lock:
            if self._executor is None:
                self._executor = ProcessPoolExecutor(max_workers=self._max_size)
        yield self._executor

    def map(self, fn: Callable[[T], R], tasks: Sequence[T]) -> List[R]:
        if self._max_size == 1 or len(tasks) <= 1:
            return [fn(task) for task in tasks]
        chunksize = max(1, len(tasks) // (self._max_size * 4))
        with self.get() as executor:
            return list(executor.map(fn, tasks, chunksize=chunksize))

    def close(self) -> None:
        with self._lock:
            if self._executor is not None:
                self._executor.shutdown()
                self._executor = None

    def __enter__(self) -> "WorkerPool":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()
