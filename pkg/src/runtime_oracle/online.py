"""Re-estimate a running application's total run time as its jobs finish.

The predicted total is always finished-job time (now a constant) plus a fresh
forward sample of the remaining jobs, never a subtraction from the initial
distribution, so the estimate cannot drift below the time already spent and
its spread shrinks as uncertainty is retired.

Two variants: FIXED_A_MEAN keeps the fitted application-level mean;
ADAPTIVE_A_MEAN re-centers it on the average of the iterative durations
observed so far (scale untouched).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from ._streams import DOMAIN_ONLINE, MAX_SEED, check_seed, substream
from .errors import SequenceError, StructureError, ValidationError
from .estimation import FittedModel, NormalParams
from .predictor import ModelKind, PredictiveSample, quantile
from .trace_model import ApplicationRun, JobKind, JobRecord

__all__ = [
    "Variant",
    "FinishedJob",
    "OnlineState",
    "TrajectoryPoint",
    "advance",
    "predict_total",
    "analytic_moments",
    "run_trajectory",
    "trajectory_csv_bytes",
]


class Variant(enum.Enum):
    FIXED_A_MEAN = "fixed"
    ADAPTIVE_A_MEAN = "adaptive"


@dataclass(frozen=True)
class FinishedJob:
    index: int
    kind: JobKind
    duration_s: float


@dataclass(frozen=True)
class OnlineState:
    """A partially executed application: observed durations plus what remains."""

    model: FittedModel
    finished: tuple[FinishedJob, ...]
    remaining_noniter: tuple[int, ...]
    remaining_iter_count: int
    variant: Variant
    structure: ModelKind = ModelKind.DEPENDENT

    def __post_init__(self):
        if self.remaining_iter_count > self.model.n_iter_jobs or self.remaining_iter_count < 0:
            raise ValidationError(
                f"remaining_iter_count {self.remaining_iter_count} outside "
                f"0..{self.model.n_iter_jobs}"
            )
        if len(self.finished) + len(self.remaining_noniter) + self.remaining_iter_count \
                != self.model.total_jobs:
            raise ValidationError("finished and remaining jobs do not partition the job set")

    @classmethod
    def initial(
        cls,
        model: FittedModel,
        variant: Variant,
        structure: ModelKind = ModelKind.DEPENDENT,
    ) -> "OnlineState":
        return cls(
            model=model,
            finished=(),
            remaining_noniter=tuple(model.noniter_indices()),
            remaining_iter_count=model.n_iter_jobs,
            variant=variant,
            structure=structure,
        )

    @property
    def next_index(self) -> int:
        return len(self.finished)

    def finished_sum_s(self) -> float:
        return sum(f.duration_s for f in self.finished)

    def observed_iter_durations(self) -> list[float]:
        return [f.duration_s for f in self.finished if f.kind is JobKind.ITERATIVE]

    def working_a_mean(self) -> NormalParams:
        """The application-level mean in effect: re-centered under ADAPTIVE_A_MEAN."""
        fitted = self.model.a_mean
        if self.variant is Variant.ADAPTIVE_A_MEAN:
            observed = self.observed_iter_durations()
            if observed:
                return NormalParams(loc=float(np.mean(observed)), scale=fitted.scale)
        return fitted


def advance(state: OnlineState, job: JobRecord) -> OnlineState:
    """Fold the next finished job into the state; jobs must arrive in index order."""
    expected = state.next_index
    if job.index != expected:
        if job.index < expected:
            raise SequenceError(f"job {job.index} already finished")
        raise SequenceError(f"job {job.index} out of order; expected job {expected}")
    if expected >= state.model.total_jobs:
        raise SequenceError(f"job {job.index} beyond the model's {state.model.total_jobs} jobs")
    model_kind = state.model.kind_of(job.index)
    if job.kind is not model_kind:
        raise StructureError(
            f"job {job.index} is {job.kind.value} but the model says {model_kind.value}"
        )

    finished = state.finished + (FinishedJob(job.index, job.kind, job.duration_s),)
    if model_kind is JobKind.NON_ITERATIVE:
        return replace(
            state,
            finished=finished,
            remaining_noniter=tuple(i for i in state.remaining_noniter if i != job.index),
        )
    return replace(state, finished=finished, remaining_iter_count=state.remaining_iter_count - 1)


def predict_total(state: OnlineState, s: int, seed: int) -> PredictiveSample:
    """Sample the total application run time given what has already finished.

    Stream layout mirrors the predictor's: stream 0 overhead, then the
    remaining non-iterative jobs in index order, then the application-level
    mean (dependent structure only), then the remaining iterative jobs.
    """
    check_seed(seed)
    if not isinstance(s, int) or isinstance(s, bool) or s < 1:
        raise ValidationError(f"sample count must be a positive integer, got {s!r}")
    model = state.model

    def draw(params: NormalParams, stream_index: int) -> np.ndarray:
        g = substream(seed, DOMAIN_ONLINE, stream_index)
        return params.loc + params.scale * g.standard_normal(s)

    total = state.finished_sum_s() + draw(model.overhead, 0)
    stream = 1
    for k in state.remaining_noniter:
        total += draw(model.noniter[k], stream)
        stream += 1

    m = state.remaining_iter_count
    if m > 0:
        if state.structure is ModelKind.DEPENDENT:
            a = draw(state.working_a_mean(), stream)
            stream += 1
            sigma = model.iter_scale_dep
            for _ in range(m):
                g = substream(seed, DOMAIN_ONLINE, stream)
                total += a + sigma * g.standard_normal(s)
                stream += 1
        else:
            for _ in range(m):
                total += draw(model.iter_pooled, stream)
                stream += 1

    return PredictiveSample(values=total, model_kind=state.structure, seed=seed)


def analytic_moments(state: OnlineState) -> tuple[float, float]:
    """Closed-form (mean, variance) of predict_total's distribution."""
    model = state.model
    mean = state.finished_sum_s() + model.overhead.loc
    var = model.overhead.scale**2
    for k in state.remaining_noniter:
        mean += model.noniter[k].loc
        var += model.noniter[k].scale**2
    m = state.remaining_iter_count
    if state.structure is ModelKind.DEPENDENT:
        working = state.working_a_mean()
        mean += m * working.loc
        var += m**2 * working.scale**2 + m * model.iter_scale_dep**2
    else:
        mean += m * model.iter_pooled.loc
        var += m * model.iter_pooled.scale**2
    return mean, var


@dataclass(frozen=True)
class TrajectoryPoint:
    """Predicted total-run-time percentiles after a given job finished.

    after_job_index is -1 for the prior point (nothing finished yet).
    """

    after_job_index: int
    p10: float
    p20: float
    p50: float
    p80: float
    p90: float

    def __post_init__(self):
        ps = (self.p10, self.p20, self.p50, self.p80, self.p90)
        if any(b < a for a, b in zip(ps, ps[1:])):
            raise ValidationError(f"percentiles out of order: {ps}")

    def percentiles(self) -> tuple[float, float, float, float, float]:
        return (self.p10, self.p20, self.p50, self.p80, self.p90)


def _point(after_job_index: int, state: OnlineState, s: int, seed: int) -> TrajectoryPoint:
    sample = predict_total(state, s, seed)
    p10, p20, p50, p80, p90 = (quantile(sample, q) for q in (0.1, 0.2, 0.5, 0.8, 0.9))
    return TrajectoryPoint(after_job_index, p10, p20, p50, p80, p90)


def run_trajectory(
    model: FittedModel,
    actual: ApplicationRun,
    variant: Variant,
    s: int,
    seed: int,
    *,
    structure: ModelKind = ModelKind.DEPENDENT,
) -> list[TrajectoryPoint]:
    """Replay a recorded run, re-predicting the total after every job.

    Returns one point per prefix length 0..n; each step uses its own derived
    seed so percentile noise is independent across steps.
    """
    check_seed(seed)
    if len(actual.jobs) != model.total_jobs:
        raise StructureError(
            f"run {actual.app_id} has {len(actual.jobs)} jobs but the model describes "
            f"{model.total_jobs}"
        )
    state = OnlineState.initial(model, variant, structure)
    points = [_point(-1, state, s, seed)]
    for step, job in enumerate(actual.jobs, start=1):
        state = advance(state, job)  # also validates the kind against the model
        points.append(_point(job.index, state, s, (seed + step) % (MAX_SEED + 1)))
    return points


def trajectory_csv_bytes(points: list[TrajectoryPoint], actual_total_s: float) -> bytes:
    lines = ["after_job_index,p10,p20,p50,p80,p90,actual_total"]
    for p in points:
        cells = [str(p.after_job_index)] + [repr(v) for v in p.percentiles()] + [repr(actual_total_s)]
        lines.append(",".join(cells))
    return ("\n".join(lines) + "\n").encode("utf-8")
