"""Monte Carlo forward sampling of application run time, plus ECDF utilities.

Application run time is the sum of every job's duration plus the spawn
overhead. The independent model draws each iterative job from the pooled
stats; the dependent model first draws a per-application mean, then draws
each iterative job around it, which widens the distribution by the squared
iterative-job count times the application-level variance.

Sampled durations are left untruncated (negative draws are kept, so moment
checks stay unbiased); `PredictiveSample.negative_count()` reports how many
totals came out negative.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from ._streams import DOMAIN_PREDICT, check_seed, substream
from .errors import ValidationError
from .estimation import FittedModel, NormalParams

logger = logging.getLogger(__name__)

__all__ = [
    "ModelKind",
    "PredictiveSample",
    "Ecdf",
    "sample_app",
    "quantile",
    "ecdf",
    "ks_distance",
    "analytic_moments",
    "ecdf_csv_bytes",
    "sample_lines_bytes",
    "parse_sample_lines",
    "DEFAULT_SAMPLES",
]

DEFAULT_SAMPLES = 10000


class ModelKind(enum.Enum):
    INDEPENDENT = "independent"
    DEPENDENT = "dependent"


@dataclass(frozen=True, eq=False)
class PredictiveSample:
    """A reproducible Monte Carlo sample of application run times, in seconds."""

    values: np.ndarray
    model_kind: ModelKind
    seed: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise ValidationError("a predictive sample needs at least one value")
        if not np.isfinite(values).all():
            raise ValidationError("predictive sample contains non-finite values")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def quantile(self, q: float) -> float:
        return quantile(self, q)

    def ecdf(self) -> "Ecdf":
        return ecdf(self)

    def negative_count(self) -> int:
        """Diagnostic: sampled totals below zero (untruncated normals allow them)."""
        return int((self.values < 0).sum())


def _as_values(x) -> np.ndarray:
    if isinstance(x, PredictiveSample):
        return x.values
    values = np.asarray(x, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValidationError("expected a non-empty 1-d collection of values")
    return values


def _draw(params: NormalParams, stream_index: int, seed: int, s: int) -> np.ndarray:
    g = substream(seed, DOMAIN_PREDICT, stream_index)
    return params.loc + params.scale * g.standard_normal(s)


def sample_app(model: FittedModel, kind: ModelKind, s: int, seed: int) -> PredictiveSample:
    """Draw `s` application run times under the given model kind.

    Stream layout (fixed, so sample i depends only on (seed, i)): stream 0 is
    the overhead, streams 1..len(noniter) the non-iterative jobs in index
    order, then the application-level mean (dependent only), then one stream
    per iterative job.
    """
    check_seed(seed)
    if not isinstance(kind, ModelKind):
        raise ValidationError(f"model kind must be a ModelKind, got {kind!r}")
    if not isinstance(s, int) or isinstance(s, bool) or s < 1:
        raise ValidationError(f"sample count must be a positive integer, got {s!r}")

    total = _draw(model.overhead, 0, seed, s)
    stream = 1
    for k in model.noniter_indices():
        total += _draw(model.noniter[k], stream, seed, s)
        stream += 1

    negative_durations = 0
    if kind is ModelKind.INDEPENDENT:
        for _ in range(model.n_iter_jobs):
            d = _draw(model.iter_pooled, stream, seed, s)
            negative_durations += int((d < 0).sum())
            total += d
            stream += 1
    else:
        a = _draw(model.a_mean, stream, seed, s)
        stream += 1
        sigma = model.iter_scale_dep
        for _ in range(model.n_iter_jobs):
            g = substream(seed, DOMAIN_PREDICT, stream)
            d = a + sigma * g.standard_normal(s)
            negative_durations += int((d < 0).sum())
            total += d
            stream += 1

    if negative_durations:
        logger.debug(
            "%d of %d iterative duration draws were negative",
            negative_durations, s * model.n_iter_jobs,
        )
    return PredictiveSample(values=total, model_kind=kind, seed=seed)


def quantile(sample, q: float) -> float:
    """Interpolated order statistic: position q*(n-1) in the sorted values."""
    if not 0.0 <= q <= 1.0:
        raise ValidationError(f"quantile level must be in [0, 1], got {q!r}")
    v = np.sort(_as_values(sample))
    p = q * (v.size - 1)
    lo = int(math.floor(p))
    frac = p - lo
    if frac == 0.0:
        return float(v[lo])
    return float(v[lo] + frac * (v[lo + 1] - v[lo]))


@dataclass(frozen=True, eq=False)
class Ecdf:
    """Right-continuous empirical CDF: sorted values and cumulative fractions."""

    values: np.ndarray
    fractions: np.ndarray

    def evaluate(self, x) -> np.ndarray:
        """Fraction of observations <= x (vectorized)."""
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        return idx / self.values.size


def ecdf(sample) -> Ecdf:
    v = np.sort(_as_values(sample))
    return Ecdf(values=v, fractions=np.arange(1, v.size + 1) / v.size)


def ks_distance(a, b) -> float:
    """Largest absolute gap between the two samples' ECDFs. Symmetric, in [0, 1]."""
    xa = np.sort(_as_values(a))
    xb = np.sort(_as_values(b))
    everywhere = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, everywhere, side="right") / xa.size
    fb = np.searchsorted(xb, everywhere, side="right") / xb.size
    return float(np.abs(fa - fb).max())


def analytic_moments(model: FittedModel, kind: ModelKind) -> tuple[float, float]:
    """Closed-form (mean, variance) of the sampled application run time."""
    noniter_mean = sum(p.loc for p in model.noniter.values())
    noniter_var = sum(p.scale**2 for p in model.noniter.values())
    ni = model.n_iter_jobs
    if kind is ModelKind.INDEPENDENT:
        mean = noniter_mean + ni * model.iter_pooled.loc + model.overhead.loc
        var = noniter_var + ni * model.iter_pooled.scale**2 + model.overhead.scale**2
    else:
        mean = noniter_mean + ni * model.a_mean.loc + model.overhead.loc
        var = (
            noniter_var
            + ni**2 * model.a_mean.scale**2
            + ni * model.iter_scale_dep**2
            + model.overhead.scale**2
        )
    return mean, var


def ecdf_csv_bytes(e: Ecdf) -> bytes:
    lines = ["value,cum_fraction"]
    lines += [f"{v!r},{f!r}" for v, f in zip(e.values.tolist(), e.fractions.tolist())]
    return ("\n".join(lines) + "\n").encode("utf-8")


def sample_lines_bytes(sample: PredictiveSample) -> bytes:
    return ("\n".join(repr(v) for v in sample.values.tolist()) + "\n").encode("utf-8")


def parse_sample_lines(data: bytes | str) -> np.ndarray:
    """Read one float per line, ignoring blank lines."""
    from .errors import ParseError

    if isinstance(data, bytes):
        data = data.decode("utf-8")
    values = []
    for line_no, line in enumerate(data.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ParseError(f"line {line_no}: not a number: {line!r}") from None
    if not values:
        raise ParseError("no values found")
    return np.array(values)
