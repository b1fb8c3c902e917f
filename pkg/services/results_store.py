"""
Results Storage Service
=======================

Keeps sweep results submitted through the HTTP API so they can be fetched
later by task_id. Storage is an in-process dict: results are lost on
restart, which is fine for sweeps that take seconds to recompute.
"""

from __future__ import annotations

import logging
import threading
from datetime import datetime
from enum import Enum
from typing import Any

logger = logging.getLogger(__name__)


class TaskStatus(str, Enum):
    """Task execution status"""
    QUEUED = "queued"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class ResultsStore:
    """Stores and retrieves sweep results keyed by task id."""

    def __init__(self):
        self._tasks: dict[str, dict[str, Any]] = {}
        self._lock = threading.Lock()
        logger.info("[ResultsStore] Using in-memory storage (results lost on restart)")

    def store_result(
        self,
        task_id: str,
        status: TaskStatus,
        result: Any = None,
        error: str | None = None,
        metadata: dict[str, Any] | None = None,
    ) -> None:
        """
        Store a sweep result.

        Args:
            task_id: Unique task identifier
            status: Current task status
            result: CSV text and summary rows once completed
            error: Error message if failed
            metadata: Request parameters (swept variable, scenario keys)
        """
        now = datetime.now().isoformat()
        with self._lock:
            previous = self._tasks.get(task_id)
            self._tasks[task_id] = {
                "task_id": task_id,
                "status": status,
                "result": result,
                "error": error,
                "metadata": metadata if metadata is not None else (previous or {}).get("metadata", {}),
                "created_at": previous["created_at"] if previous else now,
                "updated_at": now,
            }
        logger.info("[ResultsStore] Stored result for task %s (status: %s)", task_id, status.value)

    def get_result(self, task_id: str) -> dict[str, Any] | None:
        with self._lock:
            data = self._tasks.get(task_id)
            return dict(data) if data else None

    def update_status(self, task_id: str, status: TaskStatus) -> None:
        """Update just the status of a task"""
        with self._lock:
            existing = self._tasks.get(task_id)
            if existing:
                existing["status"] = status
                existing["updated_at"] = datetime.now().isoformat()

    def list_recent_tasks(self, limit: int = 10) -> list[dict[str, Any]]:
        """Most recent tasks first."""
        with self._lock:
            tasks = [dict(t) for t in self._tasks.values()]
        tasks.sort(key=lambda t: t["created_at"], reverse=True)
        return tasks[:limit]

    def clear(self) -> None:
        with self._lock:
            self._tasks.clear()


# Global singleton instance
_results_store: ResultsStore | None = None


def get_results_store() -> ResultsStore:
    """Get or create the global results store instance"""
    global _results_store
    if _results_store is None:
        _results_store = ResultsStore()
    return _results_store
