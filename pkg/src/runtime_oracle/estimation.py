"""Estimate independent- and dependent-model parameters from a TraceSet.

Iterative jobs share pooled statistics (their durations from every run are
merged); each non-iterative job index gets its own statistics. The dependent
model adds a per-application level: the mean/std of each run's average
iterative-job duration. All standard deviations use the n-1 divisor.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .errors import InsufficientDataError, ParseError, StructureError, ValidationError
from .trace_model import JobKind, TraceSet

logger = logging.getLogger(__name__)

__all__ = ["NormalParams", "FittedModel", "fit", "serialize_model", "parse_model"]


@dataclass(frozen=True)
class NormalParams:
    """Location/scale of a normal variable, in seconds."""

    loc: float
    scale: float

    def __post_init__(self):
        if not (math.isfinite(self.loc) and math.isfinite(self.scale)):
            raise ValidationError(f"normal parameters must be finite, got {self!r}")
        if self.scale < 0:
            raise ValidationError(f"scale must be >= 0, got {self.scale}")


@dataclass(frozen=True)
class FittedModel:
    """Everything needed to forward-sample application run time.

    noniter maps each non-iterative job index to its per-index stats;
    iter_pooled holds the pooled iterative stats; a_mean the per-application
    average of iterative durations; iter_scale_dep the per-job scale used
    when jobs share the application-level mean; overhead the wall-time
    residual. The iterative indices are the complement of noniter's keys in
    range(total_jobs).
    """

    noniter: Mapping[int, NormalParams]
    iter_pooled: NormalParams
    a_mean: NormalParams
    iter_scale_dep: float
    overhead: NormalParams
    n_iter_jobs: int
    n_runs: int

    def __post_init__(self):
        object.__setattr__(self, "noniter", dict(self.noniter))
        if self.n_iter_jobs < 1:
            raise ValidationError("n_iter_jobs must be positive")
        if self.n_runs < 1:
            raise ValidationError("n_runs must be positive")
        if not math.isfinite(self.iter_scale_dep) or self.iter_scale_dep < 0:
            raise ValidationError(f"iter_scale_dep must be finite and >= 0, got {self.iter_scale_dep}")
        total = len(self.noniter) + self.n_iter_jobs
        bad = [k for k in self.noniter if not isinstance(k, int) or not 0 <= k < total]
        if bad:
            raise ValidationError(f"non-iterative indices {bad} outside the 0..{total - 1} job range")

    @property
    def total_jobs(self) -> int:
        return len(self.noniter) + self.n_iter_jobs

    def noniter_indices(self) -> list[int]:
        return sorted(self.noniter)

    def iterative_indices(self) -> list[int]:
        return sorted(set(range(self.total_jobs)) - set(self.noniter))

    def kind_of(self, index: int) -> JobKind:
        if not 0 <= index < self.total_jobs:
            raise ValidationError(f"job index {index} outside the model's 0..{self.total_jobs - 1} range")
        return JobKind.NON_ITERATIVE if index in self.noniter else JobKind.ITERATIVE

    def without_overhead(self) -> "FittedModel":
        """Copy with the spawn-overhead term pinned to zero."""
        return replace(self, overhead=NormalParams(0.0, 0.0))


def _sample_stats(values: np.ndarray) -> NormalParams:
    values = np.asarray(values, dtype=float)
    scale = float(np.std(values, ddof=1)) if values.size >= 2 else 0.0
    return NormalParams(loc=float(np.mean(values)), scale=scale)


def fit(traces: TraceSet, *, within_app_scale: bool = False) -> FittedModel:
    """Estimate both models' parameters from at least two structurally equal runs.

    `within_app_scale` replaces the dependent per-job scale (by default the
    pooled scale, which double-counts between-application variance) with the
    scale of durations centered on each run's own iterative mean.

    Runs with negative overhead keep contributing job statistics but are
    excluded from overhead estimation.
    """
    runs = traces.runs
    if len(runs) < 2:
        raise InsufficientDataError(f"need at least 2 runs to fit, got {len(runs)}")

    counts = {len(r.jobs) for r in runs}
    if len(counts) > 1:
        offenders = traces.job_count_outlier_ids()
        raise StructureError(
            f"runs disagree on job count (saw {sorted(counts)}); offenders: {offenders}"
        )
    pattern = runs[0].kinds()
    for run in runs[1:]:
        if run.kinds() != pattern:
            raise StructureError(f"run {run.app_id} disagrees with {runs[0].app_id} on job kinds")

    iter_idx = [i for i, k in enumerate(pattern) if k is JobKind.ITERATIVE]
    noniter_idx = [i for i, k in enumerate(pattern) if k is JobKind.NON_ITERATIVE]
    if not iter_idx:
        raise StructureError("no iterative jobs in the training set; classify jobs first")

    # durations[r, k] = duration of job k in run r
    durations = np.array([[j.duration_s for j in run.jobs] for run in runs])

    iter_matrix = durations[:, iter_idx]
    iter_pooled = _sample_stats(iter_matrix.ravel())
    per_run_means = iter_matrix.mean(axis=1)
    a_mean = _sample_stats(per_run_means)
    noniter = {k: _sample_stats(durations[:, k]) for k in noniter_idx}

    if within_app_scale:
        centered = iter_matrix - per_run_means[:, None]
        dof = iter_matrix.size - len(runs)
        iter_scale_dep = float(np.sqrt((centered**2).sum() / dof)) if dof > 0 else 0.0
    else:
        iter_scale_dep = iter_pooled.scale

    residuals = np.array([run.overhead_s() for run in runs])
    keep = residuals >= 0
    if not keep.any():
        raise ValidationError("every run has negative overhead; wall times are unusable")
    if not keep.all():
        excluded = [runs[i].app_id for i in np.flatnonzero(~keep)]
        logger.warning("excluding %d run(s) with negative overhead from overhead estimation: %s",
                       len(excluded), excluded)
    overhead = _sample_stats(residuals[keep])

    return FittedModel(
        noniter=noniter,
        iter_pooled=iter_pooled,
        a_mean=a_mean,
        iter_scale_dep=iter_scale_dep,
        overhead=overhead,
        n_iter_jobs=len(iter_idx),
        n_runs=len(runs),
    )


def _params_doc(p: NormalParams) -> dict:
    return {"loc": p.loc, "scale": p.scale}


def serialize_model(model: FittedModel) -> bytes:
    doc = {
        "noniter": {str(k): _params_doc(p) for k, p in sorted(model.noniter.items())},
        "iter_pooled": _params_doc(model.iter_pooled),
        "a_mean": _params_doc(model.a_mean),
        "iter_scale_dep": model.iter_scale_dep,
        "overhead": _params_doc(model.overhead),
        "n_iter_jobs": model.n_iter_jobs,
        "n_runs": model.n_runs,
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def _parse_params(doc, path: str) -> NormalParams:
    if not isinstance(doc, dict):
        raise ParseError("must be an object with loc/scale", path=path)
    for key in ("loc", "scale"):
        if key not in doc:
            raise ParseError("missing field", path=f"{path}.{key}")
        if not isinstance(doc[key], (int, float)) or isinstance(doc[key], bool):
            raise ParseError("must be a number", path=f"{path}.{key}")
    try:
        return NormalParams(loc=float(doc["loc"]), scale=float(doc["scale"]))
    except ValidationError as e:
        raise ParseError(str(e), path=path) from e


def parse_model(data: bytes | str) -> FittedModel:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ParseError("document root must be an object")
    for key in ("noniter", "iter_pooled", "a_mean", "iter_scale_dep", "overhead", "n_iter_jobs", "n_runs"):
        if key not in doc:
            raise ParseError("missing field", path=key)

    noniter_doc = doc["noniter"]
    if not isinstance(noniter_doc, dict):
        raise ParseError("must be an object keyed by job index", path="noniter")
    noniter = {}
    for key, val in noniter_doc.items():
        try:
            idx = int(key)
        except ValueError:
            raise ParseError(f"key {key!r} is not a job index", path="noniter") from None
        noniter[idx] = _parse_params(val, f"noniter.{key}")

    for key in ("n_iter_jobs", "n_runs"):
        if not isinstance(doc[key], int) or isinstance(doc[key], bool):
            raise ParseError("must be an integer", path=key)
    if not isinstance(doc["iter_scale_dep"], (int, float)) or isinstance(doc["iter_scale_dep"], bool):
        raise ParseError("must be a number", path="iter_scale_dep")

    try:
        return FittedModel(
            noniter=noniter,
            iter_pooled=_parse_params(doc["iter_pooled"], "iter_pooled"),
            a_mean=_parse_params(doc["a_mean"], "a_mean"),
            iter_scale_dep=float(doc["iter_scale_dep"]),
            overhead=_parse_params(doc["overhead"], "overhead"),
            n_iter_jobs=doc["n_iter_jobs"],
            n_runs=doc["n_runs"],
        )
    except ValidationError as e:
        raise ParseError(str(e)) from e
