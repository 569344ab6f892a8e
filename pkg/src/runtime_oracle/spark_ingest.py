"""Parse Spark master event logs (JSON lines) into ApplicationRun values.

Only the application/job levels of the event stream are consumed; stage and
task events are skipped. Fields read: "Event", "Job ID", "Submission Time",
"Completion Time", "Timestamp", plus "App ID"/"App Name" for labeling.
Timestamps are millisecond epochs; everything downstream is in seconds.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import (
    EmptyInputError,
    EventLogError,
    IncompleteJobError,
    IngestError,
    MalformedLineError,
    ValidationError,
)
from .trace_model import ApplicationRun, JobKind, JobRecord, TraceSet, classify_jobs

logger = logging.getLogger(__name__)

__all__ = ["RawEvent", "iter_events", "parse_event_log", "ingest_directory"]

APP_START = "SparkListenerApplicationStart"
APP_END = "SparkListenerApplicationEnd"
JOB_START = "SparkListenerJobStart"
JOB_END = "SparkListenerJobEnd"


@dataclass(frozen=True)
class RawEvent:
    event_name: str
    payload: Mapping[str, object]


def iter_events(lines: Iterable[str]) -> Iterator[tuple[int, RawEvent]]:
    """Yield (line_no, event) pairs; line numbers are 1-based. Blank lines skipped."""
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedLineError(f"not valid JSON ({e.msg})", line_no) from e
        if not isinstance(obj, dict) or not isinstance(obj.get("Event"), str) or not obj["Event"]:
            raise MalformedLineError("event object must carry a non-empty \"Event\" field", line_no)
        yield line_no, RawEvent(event_name=obj["Event"], payload=obj)


def _field_ms(event: RawEvent, key: str, line_no: int) -> float:
    v = event.payload.get(key)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise MalformedLineError(f"{event.event_name} needs a numeric \"{key}\" field", line_no)
    return float(v)


def parse_event_log(
    lines: Iterable[str],
    *,
    app_id: str | None = None,
    wall_from_jobs: bool = False,
) -> ApplicationRun:
    """Extract one ApplicationRun from an event stream.

    The stream must contain exactly one ApplicationStart/ApplicationEnd pair.
    Jobs are sorted by "Job ID" and re-indexed from 0; all come out
    NON_ITERATIVE (classification is a separate step). By default wall time
    runs from ApplicationStart to ApplicationEnd; `wall_from_jobs` measures
    from the first job submission to the last job completion instead.
    """
    app_start_ms: float | None = None
    app_end_ms: float | None = None
    log_app_id: str | None = None
    starts: dict[int, float] = {}
    ends: dict[int, float] = {}

    for line_no, event in iter_events(lines):
        name = event.event_name
        if name == APP_START:
            if app_start_ms is not None:
                raise EventLogError("multiple ApplicationStart events; expected exactly one application")
            app_start_ms = _field_ms(event, "Timestamp", line_no)
            for key in ("App ID", "App Name"):
                v = event.payload.get(key)
                if isinstance(v, str) and v:
                    log_app_id = v
                    break
        elif name == APP_END:
            if app_end_ms is not None:
                raise EventLogError("multiple ApplicationEnd events; expected exactly one application")
            app_end_ms = _field_ms(event, "Timestamp", line_no)
        elif name == JOB_START:
            job_id = _job_id(event, line_no)
            if job_id in starts:
                raise EventLogError(f"duplicate JobStart for job id {job_id}")
            starts[job_id] = _field_ms(event, "Submission Time", line_no)
        elif name == JOB_END:
            job_id = _job_id(event, line_no)
            if job_id in ends:
                raise EventLogError(f"duplicate JobEnd for job id {job_id}")
            ends[job_id] = _field_ms(event, "Completion Time", line_no)
        # all other event types (stages, tasks, env, ...) are irrelevant here

    if app_start_ms is None:
        raise EventLogError("no ApplicationStart event")
    if app_end_ms is None:
        raise EventLogError("no ApplicationEnd event")

    unfinished = sorted(set(starts) - set(ends))
    unstarted = sorted(set(ends) - set(starts))
    if unfinished or unstarted:
        parts = []
        if unfinished:
            parts.append(f"JobStart without JobEnd for ids {unfinished}")
        if unstarted:
            parts.append(f"JobEnd without JobStart for ids {unstarted}")
        raise IncompleteJobError("; ".join(parts), job_ids=unfinished + unstarted)

    if wall_from_jobs and starts:
        t0_ms = min(starts.values())
        wall_s = (max(ends.values()) - t0_ms) / 1000.0
    else:
        t0_ms = app_start_ms
        wall_s = (app_end_ms - app_start_ms) / 1000.0

    jobs = tuple(
        JobRecord(
            index=rank,
            kind=JobKind.NON_ITERATIVE,
            start_s=(starts[job_id] - t0_ms) / 1000.0,
            end_s=(ends[job_id] - t0_ms) / 1000.0,
        )
        for rank, job_id in enumerate(sorted(starts))
    )
    return ApplicationRun(
        app_id=log_app_id or app_id or "app",
        wall_time_s=wall_s,
        jobs=jobs,
    )


def _job_id(event: RawEvent, line_no: int) -> int:
    v = event.payload.get("Job ID")
    if not isinstance(v, int) or isinstance(v, bool):
        raise MalformedLineError(f"{event.event_name} needs an integer \"Job ID\" field", line_no)
    return v


def ingest_directory(
    paths: Iterable[str | Path],
    window: tuple[int, int],
    *,
    wall_from_jobs: bool = False,
) -> TraceSet:
    """Parse one event-log file per run and classify jobs with `window`.

    Any failing file aborts the whole ingest with an aggregate error naming
    every failure. Runs come out sorted by path. Runs whose job count differs
    from the modal count are flagged on the returned TraceSet.
    """
    paths = sorted(Path(p) for p in paths)
    if not paths:
        raise EmptyInputError("no input files to ingest")

    runs = []
    failures: list[tuple[str, Exception]] = []
    for path in paths:
        try:
            with open(path, encoding="utf-8") as fh:
                run = parse_event_log(fh, app_id=path.stem, wall_from_jobs=wall_from_jobs)
            runs.append(classify_jobs(run, window))
        except (OSError, EventLogError, ValidationError) as e:
            failures.append((str(path), e))
    if failures:
        raise IngestError(failures)
    if not runs:
        raise EmptyInputError("no runs parsed")

    traces = TraceSet(runs=tuple(runs), iterative_window=window)
    for warning in traces.warnings:
        logger.warning("%s", warning)
    return traces
