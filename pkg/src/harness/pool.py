"""
Bounded worker pool for independent experiment runs
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence, TypeVar

from ..utils.logger import get_logger

logger = get_logger(__name__)

TaskT = TypeVar("TaskT")
ResultT = TypeVar("ResultT")


def run_tasks(
    fn: Callable[[TaskT], ResultT], tasks: Sequence[TaskT], threads: int = 1
) -> List[ResultT]:
    """
    Execute tasks serially or on a process pool

    Results come back in task order either way, so aggregation does not
    depend on which worker finished first. ``fn`` must be a module-level
    function when threads > 1.

    Args:
        fn: Task function
        tasks: Task descriptions
        threads: Worker processes; 1 runs in the calling process

    Returns:
        One result per task
    """
    if not tasks:
        return []
    workers = min(threads, len(tasks))
    logger.info(f"Running {len(tasks)} tasks on {workers} worker(s)")
    if workers <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, tasks))
