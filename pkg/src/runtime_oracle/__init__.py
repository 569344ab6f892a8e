"""Run-time modeling for iterative big-data applications.

Fits per-job normal models to historical job-level traces (Spark event logs
or the canonical trace format), forward-samples full-application run-time
distributions under independent and dependent (application-level mean)
structures, and re-estimates a running application's completion time as its
jobs finish.
"""

from .errors import (
    EmptyInputError,
    EventLogError,
    IncompleteJobError,
    IngestError,
    InsufficientDataError,
    MalformedLineError,
    ParseError,
    SequenceError,
    StructureError,
    ValidationError,
)
from .estimation import FittedModel, NormalParams, fit, parse_model, serialize_model
from .online import (
    FinishedJob,
    OnlineState,
    TrajectoryPoint,
    Variant,
    advance,
    predict_total,
    run_trajectory,
    trajectory_csv_bytes,
)
from .predictor import (
    DEFAULT_SAMPLES,
    Ecdf,
    ModelKind,
    PredictiveSample,
    ecdf,
    ecdf_csv_bytes,
    ks_distance,
    quantile,
    sample_app,
    sample_lines_bytes,
)
from .spark_ingest import ingest_directory, parse_event_log
from .synthgen import GcSpec, GeneratorSpec, GroundTruth, RunTruth, generate, parse_spec, serialize_spec
from .trace_model import (
    ApplicationRun,
    JobKind,
    JobRecord,
    TraceSet,
    classify_jobs,
    parse_traces,
    serialize_traces,
)

__version__ = "0.1.0"

__all__ = [
    "ApplicationRun",
    "DEFAULT_SAMPLES",
    "Ecdf",
    "EmptyInputError",
    "EventLogError",
    "FinishedJob",
    "FittedModel",
    "GcSpec",
    "GeneratorSpec",
    "GroundTruth",
    "IncompleteJobError",
    "IngestError",
    "InsufficientDataError",
    "JobKind",
    "JobRecord",
    "MalformedLineError",
    "ModelKind",
    "NormalParams",
    "OnlineState",
    "ParseError",
    "PredictiveSample",
    "RunTruth",
    "SequenceError",
    "StructureError",
    "TraceSet",
    "TrajectoryPoint",
    "ValidationError",
    "Variant",
    "advance",
    "classify_jobs",
    "ecdf",
    "ecdf_csv_bytes",
    "fit",
    "generate",
    "ingest_directory",
    "ks_distance",
    "parse_event_log",
    "parse_model",
    "parse_spec",
    "parse_traces",
    "predict_total",
    "quantile",
    "run_trajectory",
    "sample_app",
    "sample_lines_bytes",
    "serialize_model",
    "serialize_spec",
    "serialize_traces",
    "trajectory_csv_bytes",
]
