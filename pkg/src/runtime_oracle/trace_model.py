"""Core data types for application/job traces and the canonical trace format.

An application run is an ordered sequence of jobs, each either part of the
algorithm's convergence loop ("iterative") or one-off setup/teardown work
("non_iterative"). Jobs carry start/end offsets rather than bare durations so
that the spawn-overhead residual (wall time minus summed job time) can be
audited against the recorded wall time.

All types are immutable values; every operation returns a new object.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter
from dataclasses import dataclass

from .errors import ParseError, ValidationError

__all__ = [
    "JobKind",
    "JobRecord",
    "ApplicationRun",
    "TraceSet",
    "classify_jobs",
    "serialize_traces",
    "parse_traces",
]


class JobKind(enum.Enum):
    ITERATIVE = "iterative"
    NON_ITERATIVE = "non_iterative"


@dataclass(frozen=True)
class JobRecord:
    """One job: its position in the run, its kind, and its time window in seconds."""

    index: int
    kind: JobKind
    start_s: float
    end_s: float

    def __post_init__(self):
        if not isinstance(self.index, int) or isinstance(self.index, bool) or self.index < 0:
            raise ValidationError(f"job index must be a non-negative integer, got {self.index!r}")
        if not isinstance(self.kind, JobKind):
            raise ValidationError(f"job kind must be a JobKind, got {self.kind!r}")
        for name in ("start_s", "end_s"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ValidationError(f"job {self.index}: {name} must be a finite number, got {v!r}")
        if self.start_s < 0:
            raise ValidationError(f"job {self.index}: start_s must be >= 0, got {self.start_s}")
        if self.end_s < self.start_s:
            raise ValidationError(
                f"job {self.index}: end_s ({self.end_s}) precedes start_s ({self.start_s})"
            )

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class ApplicationRun:
    """One application execution: ordered jobs plus the recorded wall time."""

    app_id: str
    wall_time_s: float
    jobs: tuple[JobRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        if not isinstance(self.app_id, str) or not self.app_id:
            raise ValidationError(f"app_id must be a non-empty string, got {self.app_id!r}")
        if not isinstance(self.wall_time_s, (int, float)) or not math.isfinite(self.wall_time_s):
            raise ValidationError(f"run {self.app_id}: wall_time_s must be finite")
        for pos, job in enumerate(self.jobs):
            if job.index != pos:
                if job.index > pos:
                    raise ValidationError(f"run {self.app_id}: job index {pos} missing")
                raise ValidationError(f"run {self.app_id}: duplicate job index {job.index}")
        if self.jobs:
            last_end = max(j.end_s for j in self.jobs)
            if self.wall_time_s < last_end:
                raise ValidationError(
                    f"run {self.app_id}: wall_time_s ({self.wall_time_s}) is below the "
                    f"latest job end ({last_end})"
                )

    def job_sum_s(self) -> float:
        return sum(j.duration_s for j in self.jobs)

    def overhead_s(self) -> float:
        """Wall time not accounted for by job durations. Negative if jobs overlap."""
        return self.wall_time_s - self.job_sum_s()

    def kinds(self) -> tuple[JobKind, ...]:
        return tuple(j.kind for j in self.jobs)

    def iterative_durations(self) -> list[float]:
        return [j.duration_s for j in self.jobs if j.kind is JobKind.ITERATIVE]


@dataclass(frozen=True)
class TraceSet:
    """A collection of runs, optionally tagged with the iterative index window."""

    runs: tuple[ApplicationRun, ...]
    iterative_window: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "runs", tuple(self.runs))
        if self.iterative_window is not None:
            object.__setattr__(self, "iterative_window", tuple(self.iterative_window))
            first, last = self.iterative_window
            if not (isinstance(first, int) and isinstance(last, int)) or first > last or first < 0:
                raise ValidationError(f"invalid iterative_window {self.iterative_window!r}")
        for run in self.runs:
            if not run.jobs:
                raise ValidationError(f"run {run.app_id} has no jobs")
            if self.iterative_window is not None:
                first, last = self.iterative_window
                for job in run.jobs:
                    expected = JobKind.ITERATIVE if first <= job.index <= last else JobKind.NON_ITERATIVE
                    if job.kind is not expected:
                        raise ValidationError(
                            f"run {run.app_id}: job {job.index} is {job.kind.value} but the "
                            f"window {self.iterative_window} says {expected.value}"
                        )

    def modal_job_count(self) -> int | None:
        if not self.runs:
            return None
        counts = Counter(len(r.jobs) for r in self.runs)
        return counts.most_common(1)[0][0]

    def job_count_outlier_ids(self) -> list[str]:
        modal = self.modal_job_count()
        return [r.app_id for r in self.runs if len(r.jobs) != modal]

    def negative_overhead_ids(self) -> list[str]:
        return [r.app_id for r in self.runs if r.overhead_s() < 0]

    @property
    def warnings(self) -> tuple[str, ...]:
        """Flags recomputed from the runs: negative overheads and job-count outliers."""
        out = []
        for app_id in self.negative_overhead_ids():
            out.append(f"run {app_id}: negative overhead (jobs overlap or wall time is wrong)")
        for app_id in self.job_count_outlier_ids():
            out.append(f"run {app_id}: job count differs from the modal job count")
        return tuple(out)


def classify_jobs(run: ApplicationRun, window: tuple[int, int]) -> ApplicationRun:
    """Return a copy of `run` with jobs inside `window` (inclusive) marked iterative.

    Idempotent; the input run is left untouched.
    """
    first, last = window
    if first > last:
        raise ValidationError(f"window first index {first} exceeds last index {last}")
    n = len(run.jobs)
    for bound in (first, last):
        if not 0 <= bound < n:
            raise ValidationError(f"window index {bound} out of range for a {n}-job run")
    jobs = tuple(
        JobRecord(
            index=j.index,
            kind=JobKind.ITERATIVE if first <= j.index <= last else JobKind.NON_ITERATIVE,
            start_s=j.start_s,
            end_s=j.end_s,
        )
        for j in run.jobs
    )
    return ApplicationRun(app_id=run.app_id, wall_time_s=run.wall_time_s, jobs=jobs)


def serialize_traces(traces: TraceSet) -> bytes:
    """Encode a TraceSet as the canonical JSON document (UTF-8)."""
    doc = {
        "runs": [
            {
                "app_id": run.app_id,
                "wall_time_s": run.wall_time_s,
                "jobs": [
                    {
                        "index": job.index,
                        "kind": job.kind.value,
                        "start_s": job.start_s,
                        "end_s": job.end_s,
                    }
                    for job in run.jobs
                ],
            }
            for run in traces.runs
        ],
        "iterative_window": list(traces.iterative_window) if traces.iterative_window else None,
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def parse_traces(data: bytes | str) -> TraceSet:
    """Parse the canonical trace document, validating every invariant.

    Raises ParseError with the path of the offending element.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ParseError("document root must be an object")

    runs_doc = _require(doc, "runs", "$")
    if not isinstance(runs_doc, list):
        raise ParseError("must be a list", path="runs")

    runs = []
    for i, run_doc in enumerate(runs_doc):
        runs.append(_parse_run(run_doc, f"runs[{i}]"))

    window_doc = _require(doc, "iterative_window", "$")
    window = None
    if window_doc is not None:
        if (
            not isinstance(window_doc, list)
            or len(window_doc) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in window_doc)
        ):
            raise ParseError("must be a two-int list or null", path="iterative_window")
        window = (window_doc[0], window_doc[1])

    try:
        return TraceSet(runs=tuple(runs), iterative_window=window)
    except ValidationError as e:
        raise ParseError(str(e), path="runs") from e


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ParseError("missing field", path=f"{path}.{key}" if path != "$" else key)
    return obj[key]


def _number(obj: dict, key: str, path: str) -> float:
    v = _require(obj, key, path)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ParseError(f"must be a number, got {v!r}", path=f"{path}.{key}")
    return v


def _parse_run(run_doc, path: str) -> ApplicationRun:
    if not isinstance(run_doc, dict):
        raise ParseError("run must be an object", path=path)
    app_id = _require(run_doc, "app_id", path)
    if not isinstance(app_id, str):
        raise ParseError("must be a string", path=f"{path}.app_id")
    wall = _number(run_doc, "wall_time_s", path)
    jobs_doc = _require(run_doc, "jobs", path)
    if not isinstance(jobs_doc, list):
        raise ParseError("must be a list", path=f"{path}.jobs")

    jobs = []
    for pos, job_doc in enumerate(jobs_doc):
        jpath = f"{path}.jobs[{pos}]"
        if not isinstance(job_doc, dict):
            raise ParseError("job must be an object", path=jpath)
        index = _require(job_doc, "index", jpath)
        if not isinstance(index, int) or isinstance(index, bool):
            raise ParseError(f"must be an integer, got {index!r}", path=f"{jpath}.index")
        if index != pos:
            if index > pos:
                raise ParseError(f"job index {pos} missing", path=f"{path}.jobs")
            raise ParseError(f"duplicate job index {index}", path=f"{path}.jobs")
        kind_str = _require(job_doc, "kind", jpath)
        try:
            kind = JobKind(kind_str)
        except ValueError:
            raise ParseError(f"unknown kind {kind_str!r}", path=f"{jpath}.kind") from None
        start = _number(job_doc, "start_s", jpath)
        end = _number(job_doc, "end_s", jpath)
        try:
            jobs.append(JobRecord(index=index, kind=kind, start_s=start, end_s=end))
        except ValidationError as e:
            raise ParseError(str(e), path=jpath) from e

    try:
        return ApplicationRun(app_id=app_id, wall_time_s=wall, jobs=tuple(jobs))
    except ValidationError as e:
        raise ParseError(str(e), path=path) from e
