"""Generate synthetic TraceSets from a known ground-truth process.

Each run draws a shared application-level offset for its iterative jobs
(optionally bumped by a garbage-collection delay that hits a random subset
of runs), so fitted models can be checked against the parameters that
actually produced the data. Layout is fixed: the non-iterative jobs come
first, then the iterative block, laid out serially from t=0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from ._streams import DOMAIN_SYNTH, check_seed, substream
from .errors import ParseError, ValidationError
from .estimation import NormalParams
from .trace_model import ApplicationRun, JobKind, JobRecord, TraceSet

__all__ = [
    "GcSpec",
    "GeneratorSpec",
    "RunTruth",
    "GroundTruth",
    "generate",
    "serialize_spec",
    "parse_spec",
    "serialize_ground_truth",
]


@dataclass(frozen=True)
class GcSpec:
    """Per-application garbage-collection contamination: hit probability and delay."""

    probability: float
    delay: NormalParams

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValidationError(f"gc probability must be in [0, 1], got {self.probability}")
        if self.delay.loc <= 0:
            raise ValidationError(f"gc delay loc must be positive, got {self.delay.loc}")


@dataclass(frozen=True)
class GeneratorSpec:
    n_runs: int
    noniter: tuple[NormalParams, ...]
    n_iter: int
    iter_base: NormalParams
    app_offset_scale: float
    overhead_true: NormalParams
    gc: GcSpec | None = None
    seed: int = 0
    duration_floor: float = 0.001

    def __post_init__(self):
        object.__setattr__(self, "noniter", tuple(self.noniter))
        if self.n_runs < 1:
            raise ValidationError(f"n_runs must be positive, got {self.n_runs}")
        if self.n_iter < 1:
            raise ValidationError(f"n_iter must be positive, got {self.n_iter}")
        if not math.isfinite(self.app_offset_scale) or self.app_offset_scale < 0:
            raise ValidationError(f"app_offset_scale must be >= 0, got {self.app_offset_scale}")
        if self.duration_floor <= 0:
            raise ValidationError(f"duration_floor must be positive, got {self.duration_floor}")
        check_seed(self.seed)

    @property
    def n_jobs(self) -> int:
        return len(self.noniter) + self.n_iter

    def window(self) -> tuple[int, int]:
        return (len(self.noniter), self.n_jobs - 1)


@dataclass(frozen=True)
class RunTruth:
    """Realized latent values for one generated run."""

    app_id: str
    offset: float  # iterative-job mean actually used, gc delay included
    gc_delay: float | None
    overhead: float  # wall time minus job sum, after flooring


@dataclass(frozen=True)
class GroundTruth:
    spec: GeneratorSpec
    runs: tuple[RunTruth, ...]


def generate(spec: GeneratorSpec) -> tuple[TraceSet, GroundTruth]:
    """Draw a TraceSet plus the latent values behind it. Deterministic under seed.

    Each run consumes its own substream keyed by (seed, run index), so runs
    could be generated concurrently without changing the output.
    """
    runs = []
    truths = []
    n_noniter = len(spec.noniter)
    for r in range(spec.n_runs):
        g = substream(spec.seed, DOMAIN_SYNTH, r)

        offset = spec.iter_base.loc + spec.app_offset_scale * g.standard_normal()
        gc_delay = None
        if spec.gc is not None:
            hit = g.uniform() < spec.gc.probability
            delay = spec.gc.delay.loc + spec.gc.delay.scale * g.standard_normal()
            if hit:
                gc_delay = float(delay)
                offset += delay

        iter_d = offset + spec.iter_base.scale * g.standard_normal(spec.n_iter)
        noniter_d = [p.loc + p.scale * g.standard_normal() for p in spec.noniter]
        durations = [max(d, spec.duration_floor) for d in noniter_d] + [
            max(float(d), spec.duration_floor) for d in iter_d
        ]

        jobs = []
        t = 0.0
        for i, d in enumerate(durations):
            kind = JobKind.NON_ITERATIVE if i < n_noniter else JobKind.ITERATIVE
            jobs.append(JobRecord(index=i, kind=kind, start_s=t, end_s=t + d))
            t += d

        overhead = max(
            spec.overhead_true.loc + spec.overhead_true.scale * g.standard_normal(), 0.0
        )
        app_id = f"synth-{r:04d}"
        runs.append(ApplicationRun(app_id=app_id, wall_time_s=t + overhead, jobs=tuple(jobs)))
        truths.append(
            RunTruth(app_id=app_id, offset=float(offset), gc_delay=gc_delay, overhead=float(overhead))
        )

    traces = TraceSet(runs=tuple(runs), iterative_window=spec.window())
    return traces, GroundTruth(spec=spec, runs=tuple(truths))


def _params_doc(p: NormalParams) -> dict:
    return {"loc": p.loc, "scale": p.scale}


def _parse_params(doc, path: str) -> NormalParams:
    if (
        not isinstance(doc, dict)
        or not all(isinstance(doc.get(k), (int, float)) and not isinstance(doc.get(k), bool)
                   for k in ("loc", "scale"))
    ):
        raise ParseError("must be an object with numeric loc/scale", path=path)
    try:
        return NormalParams(loc=float(doc["loc"]), scale=float(doc["scale"]))
    except ValidationError as e:
        raise ParseError(str(e), path=path) from e


def serialize_spec(spec: GeneratorSpec) -> bytes:
    doc = {
        "n_runs": spec.n_runs,
        "noniter": [_params_doc(p) for p in spec.noniter],
        "n_iter": spec.n_iter,
        "iter_base": _params_doc(spec.iter_base),
        "app_offset_scale": spec.app_offset_scale,
        "overhead_true": _params_doc(spec.overhead_true),
        "gc": None
        if spec.gc is None
        else {"probability": spec.gc.probability, "delay": _params_doc(spec.gc.delay)},
        "seed": spec.seed,
        "duration_floor": spec.duration_floor,
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def parse_spec(data: bytes | str) -> GeneratorSpec:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ParseError("document root must be an object")
    for key in ("n_runs", "noniter", "n_iter", "iter_base", "app_offset_scale", "overhead_true"):
        if key not in doc:
            raise ParseError("missing field", path=key)
    if not isinstance(doc["noniter"], list):
        raise ParseError("must be a list of loc/scale objects", path="noniter")

    gc = None
    gc_doc = doc.get("gc")
    if gc_doc is not None:
        if not isinstance(gc_doc, dict) or "probability" not in gc_doc or "delay" not in gc_doc:
            raise ParseError("must be null or an object with probability/delay", path="gc")
        try:
            gc = GcSpec(
                probability=float(gc_doc["probability"]),
                delay=_parse_params(gc_doc["delay"], "gc.delay"),
            )
        except ValidationError as e:
            raise ParseError(str(e), path="gc") from e

    try:
        return GeneratorSpec(
            n_runs=doc["n_runs"],
            noniter=tuple(
                _parse_params(p, f"noniter[{i}]") for i, p in enumerate(doc["noniter"])
            ),
            n_iter=doc["n_iter"],
            iter_base=_parse_params(doc["iter_base"], "iter_base"),
            app_offset_scale=float(doc["app_offset_scale"]),
            overhead_true=_parse_params(doc["overhead_true"], "overhead_true"),
            gc=gc,
            seed=doc.get("seed", 0),
            duration_floor=float(doc.get("duration_floor", 0.001)),
        )
    except ValidationError as e:
        raise ParseError(str(e)) from e
    except (TypeError, KeyError) as e:
        raise ParseError(f"malformed generator spec: {e}") from e


def serialize_ground_truth(truth: GroundTruth) -> bytes:
    doc = {
        "spec": json.loads(serialize_spec(truth.spec).decode("utf-8")),
        "runs": [
            {
                "app_id": t.app_id,
                "offset": t.offset,
                "gc_delay": t.gc_delay,
                "overhead": t.overhead,
            }
            for t in truth.runs
        ],
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
