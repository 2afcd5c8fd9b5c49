"""In-process label jobs: a bounded worker pool with idempotent submission.

Jobs move Queued -> Running -> Done | Failed, never backwards. Submitting
the same (project, idempotency_key) twice returns the first job untouched,
so clients can blindly retry. The runner is deliberately not durable: on
restart, clients resubmit with their original idempotency keys.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .core import Annotation, AnnotationStatus
from .errors import InvalidFilterError
from .pipeline import ItemOutcome


class JobState(str, Enum):
    QUEUED = "Queued"
    RUNNING = "Running"
    DONE = "Done"
    FAILED = "Failed"


@dataclass
class LabelJob:
    job_id: str
    project_id: str
    filter: dict
    state: JobState = JobState.QUEUED
    outcomes: List[ItemOutcome] = field(default_factory=list)
    error: Optional[str] = None
    idempotency_key: str = ""

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "project_id": self.project_id,
            "filter": self.filter,
            "state": self.state.value,
            "outcomes": [o.to_dict() for o in self.outcomes],
            "error": self.error,
            "idempotency_key": self.idempotency_key,
        }


_ALLOWED_FILTER_KEYS = {"status", "ids"}


def select_annotations(annotations: Dict[str, Annotation], filter_spec: dict) -> List[Annotation]:
    """Resolve a status/ids filter against a project's annotations.

    The spec is a dict with optional keys ``status`` (one status name or a
    list of them) and ``ids`` (annotation ids, all of which must exist).
    An empty spec selects everything. Result is ordered by annotation id.

    Raises:
        InvalidFilterError: unknown keys, unknown status, or unknown ids.
    """
    if not isinstance(filter_spec, dict):
        raise InvalidFilterError("filter must be an object")
    unknown = set(filter_spec) - _ALLOWED_FILTER_KEYS
    if unknown:
        raise InvalidFilterError(f"unknown filter keys: {', '.join(sorted(unknown))}")

    picked = list(annotations.values())

    if "ids" in filter_spec:
        ids = filter_spec["ids"]
        if not isinstance(ids, (list, tuple)) or not all(isinstance(i, str) for i in ids):
            raise InvalidFilterError("ids must be a list of annotation ids")
        missing = [i for i in ids if i not in annotations]
        if missing:
            raise InvalidFilterError(f"unknown annotation ids: {', '.join(missing)}")
        wanted = set(ids)
        picked = [a for a in picked if a.id in wanted]

    if "status" in filter_spec:
        raw = filter_spec["status"]
        names = [raw] if isinstance(raw, str) else list(raw)
        try:
            statuses = {AnnotationStatus(name) for name in names}
        except ValueError:
            valid = ", ".join(s.value for s in AnnotationStatus)
            raise InvalidFilterError(f"unknown status in {names!r}; expected one of: {valid}")
        picked = [a for a in picked if a.status in statuses]

    return sorted(picked, key=lambda a: a.id)


class JobRunner:
    """Runs label jobs on a bounded thread pool, one worker per job."""

    def __init__(self, max_workers: int = 2):
        self._pool = ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="labeljob")
        self._lock = threading.Lock()
        self._jobs: Dict[str, LabelJob] = {}
        self._by_key: Dict[Tuple[str, str], str] = {}

    def submit(
        self,
        project_id: str,
        filter_spec: dict,
        idempotency_key: str,
        select: Callable[[dict], Sequence[Annotation]],
        run: Callable[[Sequence[Annotation]], List[ItemOutcome]],
    ) -> LabelJob:
        """Enqueue a labeling run over ``select(filter_spec)``.

        ``run`` does the actual labeling and committing; it executes on a
        worker thread. A repeated idempotency key returns the original job
        without calling either function again.
        """
        dedup_key = (project_id, idempotency_key)
        with self._lock:
            existing = self._by_key.get(dedup_key)
            if existing is not None:
                return self._jobs[existing]

        selection = list(select(filter_spec))  # InvalidFilter propagates to the caller
        job = LabelJob(
            job_id=uuid.uuid4().hex,
            project_id=project_id,
            filter=dict(filter_spec),
            idempotency_key=idempotency_key,
        )
        with self._lock:
            # lost race on the same key: keep the first submission
            existing = self._by_key.get(dedup_key)
            if existing is not None:
                return self._jobs[existing]
            self._jobs[job.job_id] = job
            self._by_key[dedup_key] = job.job_id

        if not selection:
            with self._lock:
                job.state = JobState.RUNNING
                job.state = JobState.DONE
            return job

        self._pool.submit(self._execute, job, run, selection)
        return job

    def _execute(self, job: LabelJob, run, selection) -> None:
        with self._lock:
            job.state = JobState.RUNNING
        try:
            outcomes = run(selection)
        except Exception as exc:
            with self._lock:
                job.state = JobState.FAILED
                job.error = f"{type(exc).__name__}: {exc}"
            return
        with self._lock:
            job.outcomes = list(outcomes)
            job.state = JobState.DONE

    def get(self, job_id: str) -> Optional[LabelJob]:
        with self._lock:
            return self._jobs.get(job_id)

    def wait(self, job_id: str, timeout: float = 30.0) -> LabelJob:
        """Block until the job settles (test/CLI convenience)."""
        import time

        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            job = self.get(job_id)
            if job is None:
                raise KeyError(job_id)
            if job.state in (JobState.DONE, JobState.FAILED):
                return job
            time.sleep(0.01)
        raise TimeoutError(f"job {job_id} did not settle within {timeout}s")

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)
