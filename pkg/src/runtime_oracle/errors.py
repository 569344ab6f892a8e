"""Exception taxonomy shared by all modules.

Two families: ValidationError for violated invariants or bad arguments on
in-memory values, ParseError for malformed external documents. The CLI maps
them to distinct exit codes, so new exceptions should subclass one of the two.
"""


class ValidationError(ValueError):
    """An invariant or argument contract was violated."""


class InsufficientDataError(ValidationError):
    """Not enough runs or observations to estimate anything."""


class StructureError(ValidationError):
    """Job structure disagrees across runs, or between a run and a model."""


class SequenceError(ValidationError):
    """A job was reported out of order during online re-estimation."""


class EmptyInputError(ValidationError):
    """An operation that needs at least one input received none."""


class ParseError(ValueError):
    """A document could not be parsed; `path` points at the offending element."""

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


class EventLogError(ParseError):
    """A Spark event log is structurally unusable."""


class MalformedLineError(EventLogError):
    """A single event-log line could not be decoded; carries the line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class IncompleteJobError(EventLogError):
    """Job start/end events could not be paired; carries the job ids."""

    def __init__(self, message: str, job_ids: list[int]):
        super().__init__(message)
        self.job_ids = list(job_ids)


class IngestError(EventLogError):
    """One or more files failed to ingest; carries (path, error) pairs."""

    def __init__(self, failures: list[tuple[str, Exception]]):
        lines = [f"{p}: {e}" for p, e in failures]
        super().__init__("failed to ingest %d file(s):\n  %s" % (len(failures), "\n  ".join(lines)))
        self.failures = list(failures)
