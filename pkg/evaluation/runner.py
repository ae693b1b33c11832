"""
Frame runner for per-frame work over ensembles.

Frames are independent; work is spread over a thread pool and results are
merged back in frame order, so output never depends on the worker count.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Any, Callable, Dict, List, Sequence, TypeVar

from utils.tracing import trace_span

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class FrameRunner:
    """Runs a function over frames, sequentially or on a thread pool."""

    def __init__(self, max_workers: int = 1):
        """
        Args:
            max_workers: Maximum number of parallel workers
        """
        self.max_workers = max(1, int(max_workers))
        self.timings: List[Dict[str, Any]] = []

    def run_single(self, index: int, item: T, fn: Callable[[T], R]) -> R:
        start_time = time.time()
        with trace_span("frame", {"frame.index": index}):
            result = fn(item)
        self.timings.append({"index": index, "execution_time_ms": int((time.time() - start_time) * 1000)})
        return result

    def run_batch(self, items: Sequence[T], fn: Callable[[T], R]) -> List[R]:
        """
        Apply fn to every item.

        Args:
            items: Frames (or any per-frame payload)
            fn: Work function

        Returns:
            Results in the order of items

        Raises:
            The error of the lowest-indexed failing item
        """
        if self.max_workers == 1 or len(items) < 2:
            return [self.run_single(i, item, fn) for i, item in enumerate(items)]

        results: Dict[int, R] = {}
        errors: Dict[int, BaseException] = {}
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = {executor.submit(self.run_single, i, item, fn): i for i, item in enumerate(items)}
            for future in as_completed(futures):
                index = futures[future]
                try:
                    results[index] = future.result()
                except Exception as e:
                    errors[index] = e

        if errors:
            first = min(errors)
            logger.error("%d of %d frames failed, first failure at frame %d", len(errors), len(items), first)
            raise errors[first]
        return [results[i] for i in range(len(items))]

    def get_average_execution_time(self) -> float:
        """Average per-frame execution time in milliseconds."""
        if not self.timings:
            return 0.0
        return sum(t["execution_time_ms"] for t in self.timings) / len(self.timings)
