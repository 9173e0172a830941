"""Background job execution: one worker thread, so at most one training-class
job mutates state at a time; status reads hand out snapshots."""

from __future__ import annotations

import queue
import threading
import time
import traceback
import uuid
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

from ..errors import ValidationError

_TRANSITIONS = {
    "queued": {"running"},
    "running": {"done", "failed"},
    "done": set(),
    "failed": set(),
}


@dataclass
class JobRecord:
    id: str
    kind: str  # train | fine-tune | evaluate
    status: str = "queued"
    params: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    error: Optional[str] = None
    created_at: float = field(default_factory=time.time)
    started_at: Optional[float] = None
    finished_at: Optional[float] = None

    def advance(self, status: str) -> None:
        if status not in _TRANSITIONS[self.status]:
            raise ValidationError(
                f"job {self.id}: illegal transition {self.status} -> {status}"
            )
        self.status = status


class JobManager:
    def __init__(self, home: Path):
        self.home = Path(home)
        self._records: dict[str, JobRecord] = {}
        self._queue: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(self, kind: str, params: dict, fn: Callable[[Path], dict]) -> str:
        if kind not in ("train", "fine-tune", "evaluate"):
            raise ValidationError(f"unknown job kind {kind!r}")
        job_id = uuid.uuid4().hex[:12]
        record = JobRecord(id=job_id, kind=kind, params=params)
        with self._lock:
            self._records[job_id] = record
        self._queue.put((job_id, fn))
        return job_id

    def get(self, job_id: str) -> Optional[dict]:
        with self._lock:
            record = self._records.get(job_id)
            return asdict(record) if record else None

    def all(self) -> list[dict]:
        with self._lock:
            return [asdict(r) for r in self._records.values()]

    def job_dir(self, job_id: str) -> Path:
        d = self.home / "jobs" / job_id
        d.mkdir(parents=True, exist_ok=True)
        return d

    def _run(self) -> None:
        while True:
            job_id, fn = self._queue.get()
            with self._lock:
                record = self._records[job_id]
                record.advance("running")
                record.started_at = time.time()
            try:
                artifacts = fn(self.job_dir(job_id))
                with self._lock:
                    record.artifacts = artifacts or {}
                    record.advance("done")
            except Exception as exc:  # job failures are reported, not raised
                with self._lock:
                    record.error = f"{type(exc).__name__}: {exc}"
                    record.artifacts.setdefault("traceback", traceback.format_exc())
                    record.advance("failed")
            finally:
                with self._lock:
                    record.finished_at = time.time()
                self._queue.task_done()
