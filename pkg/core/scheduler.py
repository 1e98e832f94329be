#!/usr/bin/env python3
"""
工作池模块
按输入顺序返回结果的线程池，单个任务的异常被捕获并附上输入序号
"""

import threading
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Deque, Dict, Iterable, Iterator, List, Optional

from kivy.logger import Logger

from .config import forge_config
from .errors import ForgeError


@dataclass
class TaskOutcome:
    """单个任务的结果"""
    index: int
    value: Any = None
    error: Optional[BaseException] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def unwrap(self) -> Any:
        """返回结果；出错时抛出带序号的异常"""
        if self.error is None:
            return self.value
        if isinstance(self.error, ForgeError):
            raise self.error.with_index(self.index + 1)
        raise self.error


class WorkPool:
    """有序工作池"""

    def __init__(self, max_workers: Optional[int] = None):
        """初始化工作池"""
        self.max_workers = max_workers or forge_config.get_thread_count()
        self.stop_event = threading.Event()
        self.completed = 0
        self.failed = 0
        self._executor: Optional[ThreadPoolExecutor] = None
        self._lock = threading.Lock()

    def __enter__(self) -> 'WorkPool':
        return self

    def __exit__(self, exc_type, exc, tb):
        self.shutdown()

    @property
    def is_running(self) -> bool:
        return self._executor is not None

    def get_executor(self) -> ThreadPoolExecutor:
        with self._lock:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=self.max_workers,
                                                    thread_name_prefix='forge-worker')
                Logger.debug(f"WorkPool: 启动 {self.max_workers} 个工作线程")
            return self._executor

    def _run(self, fn: Callable[[Any], Any], index: int, item: Any) -> TaskOutcome:
        if self.stop_event.is_set():
            return TaskOutcome(index, error=RuntimeError('工作池已停止'))
        try:
            return TaskOutcome(index, value=fn(item))
        except Exception as e:
            Logger.debug(f"WorkPool: 任务 #{index} 失败 - {e}")
            return TaskOutcome(index, error=e)

    def _record(self, outcome: TaskOutcome) -> TaskOutcome:
        with self._lock:
            if outcome.ok:
                self.completed += 1
            else:
                self.failed += 1
        return outcome

    def imap_ordered(self, fn: Callable[[Any], Any], items: Iterable[Any],
                     window: Optional[int] = None) -> Iterator[TaskOutcome]:
        """流式执行，按输入顺序逐个产出结果；同时在途的任务数不超过window"""
        if self.max_workers <= 1:
            for index, item in enumerate(items):
                if self.stop_event.is_set():
                    break
                yield self._record(self._run(fn, index, item))
            return

        executor = self.get_executor()
        window = window or 4 * self.max_workers
        pending: Deque[Future] = deque()

        for index, item in enumerate(items):
            if self.stop_event.is_set():
                break
            pending.append(executor.submit(self._run, fn, index, item))
            if len(pending) >= window:
                yield self._record(pending.popleft().result())

        while pending:
            yield self._record(pending.popleft().result())

    def map_ordered(self, fn: Callable[[Any], Any], items: Iterable[Any]) -> List[TaskOutcome]:
        """执行全部任务，结果按输入顺序排列"""
        return list(self.imap_ordered(fn, items))

    def stop(self) -> bool:
        """停止接收新任务"""
        try:
            self.stop_event.set()
            Logger.info("WorkPool: 已请求停止")
            return True
        except Exception as e:
            Logger.error(f"WorkPool: 停止失败 - {e}")
            return False

    def shutdown(self):
        """关闭线程池"""
        with self._lock:
            executor, self._executor = self._executor, None
        if executor is not None:
            executor.shutdown(wait=True)
            Logger.debug("WorkPool: 工作线程已关闭")

    def get_status(self) -> Dict[str, Any]:
        """获取工作池状态"""
        return {
            'is_running': self.is_running,
            'max_workers': self.max_workers,
            'completed': self.completed,
            'failed': self.failed,
            'stopped': self.stop_event.is_set(),
        }
