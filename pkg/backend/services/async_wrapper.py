"""
Thread-pool execution for target sweeps and the HTTP surface
"""

import asyncio
import threading
from concurrent.futures import ThreadPoolExecutor
from functools import partial, wraps
from typing import Any, Callable, List, Optional, Sequence, TypeVar
import logging

import sys
from pathlib import Path
backend_dir = Path(__file__).parent.parent
if str(backend_dir) not in sys.path:
    sys.path.insert(0, str(backend_dir))

from config import settings

logger = logging.getLogger(__name__)

WORKER_PREFIX = "quad_worker"

T = TypeVar("T")
R = TypeVar("R")


class AsyncExecutor:
    """
    Shared worker pool for CPU-bound quadrature work.

    numpy releases the GIL inside the dense kernels, so threads give real
    overlap on chunked sweeps without pickling panels to subprocesses.
    """

    _instance: Optional["AsyncExecutor"] = None
    _pool: Optional[ThreadPoolExecutor] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    @property
    def max_workers(self) -> int:
        return max(1, settings.app.max_workers)

    @property
    def pool(self) -> ThreadPoolExecutor:
        if self._pool is None:
            logger.debug("Starting %d quadrature workers", self.max_workers)
            self._pool = ThreadPoolExecutor(max_workers=self.max_workers,
                                            thread_name_prefix=WORKER_PREFIX)
        return self._pool

    async def run_in_thread(self, func: Callable, *args, **kwargs) -> Any:
        """Await a blocking call on the pool"""
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self.pool, partial(func, *args, **kwargs))

    def map_chunks(self, func: Callable[[Sequence[T]], R], items: Sequence[T],
                   chunk_size: int = 0) -> List[R]:
        """
        Apply func to consecutive chunks of items and return the results in order.

        Runs inline when there is a single worker or a single chunk, and when
        called from a pool thread: a worker blocking on chunks queued behind
        itself would deadlock once every worker does the same.
        """
        count = len(items)
        if count == 0:
            return []
        if chunk_size <= 0:
            chunk_size = max(1, -(-count // (4 * self.max_workers)))
        chunks = [items[i:i + chunk_size] for i in range(0, count, chunk_size)]
        if self.max_workers == 1 or len(chunks) == 1 or on_worker_thread():
            return [func(chunk) for chunk in chunks]
        logger.debug("Dispatching %d chunks of up to %d items to %d workers",
                     len(chunks), chunk_size, self.max_workers)
        return list(self.pool.map(func, chunks))

    def shutdown(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None


def on_worker_thread() -> bool:
    return threading.current_thread().name.startswith(WORKER_PREFIX)


async_executor = AsyncExecutor()


def run_async_in_thread(func: Callable) -> Callable:
    """
    Turn a blocking function into a coroutine that runs on the worker pool,
    e.g. for an endpoint body that builds panels and sweeps a grid.
    """
    @wraps(func)
    async def runner(*args, **kwargs):
        return await async_executor.run_in_thread(func, *args, **kwargs)
    return runner


async def cleanup_async_resources() -> None:
    """Stop the pool on application shutdown"""
    logger.info("Shutting down quadrature workers...")
    async_executor.shutdown()
    logger.info("Quadrature workers stopped")
