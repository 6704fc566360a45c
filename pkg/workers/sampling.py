import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, List, Optional, Sequence

from core.constants import Config
from core.errors import VerificationError

logger = logging.getLogger(__name__)


def get_memory_usage_mb():
    try:
        import psutil
        process = psutil.Process()
        return process.memory_info().rss / 1024 / 1024
    except ImportError:
        return None


def check_memory_safety(operation_name: str, max_mb: int=Config.MAX_MEMORY_MB) -> bool:
    current_mb = get_memory_usage_mb()
    if current_mb is not None and current_mb > max_mb:
        logger.warning(f'{operation_name} - High memory usage: {current_mb:.1f}MB')
        return False
    return True


class SampleWorker:
    """Evaluates one function over many sample points on a thread pool.

    Results come back in point order regardless of completion order. The
    memory guard runs before the pool starts and between batches.
    """

    def __init__(self, func: Callable[[Any], Any], workers: int=Config.SAMPLE_WORKERS, operation: str='Sampling', progress: Optional[Callable[[int, int], None]]=None):
        self.func = func
        self.workers = max(1, workers)
        self.operation = operation
        self.progress = progress
        self._is_cancelled = False
        self._last_progress_time = 0.0
        self._min_update_interval = 0.1

    def cancel(self):
        self._is_cancelled = True

    def _should_emit_progress(self, current: int, total: int) -> bool:
        if current == total:
            return True
        now = time.time()
        if now - self._last_progress_time >= self._min_update_interval:
            self._last_progress_time = now
            return True
        return False

    def run(self, points: Sequence[Any]) -> List[Any]:
        points = list(points)
        if not check_memory_safety(f'{self.operation} - Pre-run'):
            raise VerificationError(f'{self.operation}: insufficient memory to start sampling', 'memory')
        results: List[Any] = [None] * len(points)
        batch = self.workers * 4
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            for start in range(0, len(points), batch):
                if self._is_cancelled:
                    raise VerificationError(f'{self.operation} cancelled', 'cancelled')
                chunk = points[start:start + batch]
                for offset, value in enumerate(pool.map(self.func, chunk)):
                    results[start + offset] = value
                done = start + len(chunk)
                if self.progress and self._should_emit_progress(done, len(points)):
                    self.progress(done, len(points))
                if not check_memory_safety(f'{self.operation} - Processing'):
                    raise VerificationError(f'{self.operation}: memory usage too high, aborted after {done} samples', 'memory')
        logger.debug(f'{self.operation}: evaluated {len(points)} samples on {self.workers} workers')
        return results


def run_samples(func: Callable[[Any], Any], points: Sequence[Any], workers: int=Config.SAMPLE_WORKERS, operation: str='Sampling') -> List[Any]:
    return SampleWorker(func, workers, operation).run(points)
