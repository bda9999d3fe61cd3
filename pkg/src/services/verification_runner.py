"""
Concurrent execution of independent verification tasks.

Each task is a zero-argument callable returning a report. Tasks run in worker
threads, at most ``max_workers`` at a time, and results come back sorted by
task id whatever the completion order.
"""

import asyncio
import time
from typing import Any, Callable, Dict, List, Mapping, Optional

import structlog

from src.config.settings import get_settings


logger = structlog.get_logger()

Task = Callable[[], Any]


class VerificationRunner:
    """Bounded fan-out of verification tasks over asyncio worker threads."""

    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = max_workers or get_settings().max_workers

    async def _run_one(self, semaphore: asyncio.Semaphore, task_id: str, task: Task) -> Any:
        async with semaphore:
            start = time.perf_counter()
            result = await asyncio.to_thread(task)
            logger.debug(
                "task_finished",
                id=task_id,
                passed=getattr(result, "passed", None),
                elapsed_ms=int((time.perf_counter() - start) * 1000),
            )
            return result

    async def run(self, tasks: Mapping[str, Task]) -> List[Any]:
        """Run every task; the first exception raised by a task propagates."""
        semaphore = asyncio.Semaphore(self.max_workers)
        ordered = sorted(tasks)
        logger.info("verification_batch_started", tasks=len(ordered), max_workers=self.max_workers)
        results = await asyncio.gather(*(self._run_one(semaphore, i, tasks[i]) for i in ordered))
        by_id: Dict[str, Any] = dict(zip(ordered, results))
        failed = [i for i in ordered if not getattr(by_id[i], "passed", True)]
        logger.info("verification_batch_finished", tasks=len(ordered), failed=failed)
        return [by_id[i] for i in ordered]

    def run_sync(self, tasks: Mapping[str, Task]) -> List[Any]:
        return asyncio.run(self.run(tasks))
