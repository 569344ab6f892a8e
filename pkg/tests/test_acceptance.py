"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. The statistical criteria use generator parameters that were validated
by brute-force simulation before being frozen here; every tolerance below is
part of the criterion, not tunable.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from runtime_oracle.errors import EventLogError, IncompleteJobError, MalformedLineError
from runtime_oracle.estimation import FittedModel, NormalParams, fit
from runtime_oracle.online import (
    OnlineState,
    Variant,
    advance,
    analytic_moments as online_moments,
    predict_total,
    run_trajectory,
)
from runtime_oracle.predictor import ModelKind, analytic_moments, ks_distance, sample_app
from runtime_oracle.spark_ingest import parse_event_log
from runtime_oracle.synthgen import GcSpec, GeneratorSpec, generate, serialize_spec
from runtime_oracle.trace_model import ApplicationRun, JobKind, JobRecord, TraceSet


def report(number, name, ok):
    print(f"ACCEPTANCE {number} {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, f"acceptance criterion {number} ({name}) failed"


def example_model():
    """The worked two-run fit: noniter {0}, two iterative jobs, zero-scale overhead."""
    return FittedModel(
        noniter={0: NormalParams(2.0, np.sqrt(2.0))},
        iter_pooled=NormalParams(4.0, np.sqrt(8.0 / 3.0)),
        a_mean=NormalParams(4.0, np.sqrt(2.0)),
        iter_scale_dep=np.sqrt(8.0 / 3.0),
        overhead=NormalParams(1.0, 0.0),
        n_iter_jobs=2,
        n_runs=2,
    )


def example_traces():
    def run(app_id, durations, wall):
        kinds = [JobKind.NON_ITERATIVE, JobKind.ITERATIVE, JobKind.ITERATIVE]
        jobs, t = [], 0.0
        for i, (d, k) in enumerate(zip(durations, kinds)):
            jobs.append(JobRecord(index=i, kind=k, start_s=t, end_s=t + d))
            t += d
        return ApplicationRun(app_id=app_id, wall_time_s=wall, jobs=tuple(jobs))

    return TraceSet(
        runs=(run("r1", [1.0, 2.0, 4.0], 8.0), run("r2", [3.0, 4.0, 6.0], 14.0)),
        iterative_window=(1, 2),
    )


def test_criterion_1_moment_fidelity():
    t0 = time.time()
    model = example_model()
    s = 100_000
    clean_seeds = 0
    for seed in range(100):
        ok = True
        for kind in ModelKind:
            mean, var = analytic_moments(model, kind)
            v = sample_app(model, kind, s, seed).values
            ok = ok and abs(v.mean() - mean) < 3 * np.sqrt(var / s)
            ok = ok and abs(v.var(ddof=1) - var) < 3 * var * np.sqrt(2.0 / (s - 1))
        clean_seeds += ok
    elapsed = time.time() - t0
    report(1, "moment fidelity", clean_seeds >= 95 and elapsed < 30.0)


# Generator profiles frozen after brute-force validation of the pass rates.
_NONITER_FLAT = tuple(NormalParams(loc, 0.2) for loc in (1.5, 2.0, 1.0, 2.5, 1.2, 0.8, 1.8))
_NONITER_HEAVY_INIT = tuple(
    NormalParams(loc, scale)
    for loc, scale in [(9.0, 2.0), (2.0, 0.3), (1.0, 0.2), (1.2, 0.2), (0.8, 0.2), (1.5, 0.3), (2.5, 0.5)]
)


def _gc_spec(seed):
    # delay loc is 4 x the iterative within-run sigma, hitting half the runs
    return GeneratorSpec(
        n_runs=200,
        noniter=_NONITER_FLAT,
        n_iter=19,
        iter_base=NormalParams(8.0, 0.5),
        app_offset_scale=0.2,
        overhead_true=NormalParams(1.0, 0.2),
        gc=GcSpec(probability=0.5, delay=NormalParams(2.0, 0.3)),
        seed=seed,
    )


def _clean_spec(seed):
    # run-level effects small; spread dominated by the heavy init job, as in
    # the uncontaminated cluster experiment this reproduces
    return GeneratorSpec(
        n_runs=200,
        noniter=_NONITER_HEAVY_INIT,
        n_iter=19,
        iter_base=NormalParams(8.0, 0.3),
        app_offset_scale=0.05,
        overhead_true=NormalParams(1.0, 0.2),
        seed=seed,
    )


def test_criterion_2_variance_gap_under_gc_contamination():
    t0 = time.time()
    hits = 0
    for seed in range(100):
        train, _ = generate(_gc_spec(2 * seed))
        holdout, _ = generate(_gc_spec(2 * seed + 1))
        model = fit(train)
        wall = np.array([r.wall_time_s for r in holdout.runs])
        ind = sample_app(model, ModelKind.INDEPENDENT, 4000, seed=seed)
        dep = sample_app(model, ModelKind.DEPENDENT, 4000, seed=seed)
        narrow = ind.values.std(ddof=1) < 0.6 * wall.std(ddof=1)
        better = ks_distance(dep, wall) < ks_distance(ind, wall)
        hits += narrow and better
    elapsed = time.time() - t0
    report(2, "variance gap under gc contamination", hits >= 90 and elapsed < 120.0)


def test_criterion_3_clean_regime_fit():
    hits = 0
    for seed in range(100):
        train, _ = generate(_clean_spec(2 * seed))
        holdout, _ = generate(_clean_spec(2 * seed + 1))
        model = fit(train)
        wall = np.array([r.wall_time_s for r in holdout.runs])
        ok = True
        for kind in ModelKind:
            ok = ok and ks_distance(sample_app(model, kind, 4000, seed=seed), wall) < 0.15
        hits += ok
    report(3, "clean regime fit", hits >= 90)


def test_criterion_4_online_variance_monotonicity():
    model = example_model()
    state = OnlineState.initial(model, Variant.FIXED_A_MEAN)
    observed = [
        (JobKind.NON_ITERATIVE, 1.0),
        (JobKind.ITERATIVE, 5.0),
        (JobKind.ITERATIVE, 3.0),
    ]
    ok = True
    prev_var = online_moments(state)[1]
    for i, (kind, duration) in enumerate(observed):
        state = advance(state, JobRecord(index=i, kind=kind, start_s=0.0, end_s=duration))
        _, var = online_moments(state)
        ok = ok and var < prev_var  # every finished job here has a positive-scale term
        mc_var = predict_total(state, 100_000, seed=i).values.var(ddof=1)
        if var > 0:
            ok = ok and abs(mc_var - var) / var < 0.05
        else:
            ok = ok and mc_var == 0.0
        prev_var = var
    report(4, "online variance monotonicity", ok)


def test_criterion_5_adaptive_recentering():
    noniter = tuple(NormalParams(loc, 0.2) for loc in (1.5, 2.5, 1.0))
    sigma_a = 0.75
    hits = 0
    for seed in range(100):
        train_spec = GeneratorSpec(
            n_runs=200, noniter=noniter, n_iter=10,
            iter_base=NormalParams(8.0, 0.5), app_offset_scale=sigma_a,
            overhead_true=NormalParams(1.0, 0.0), seed=3 * seed,
        )
        model = fit(generate(train_spec)[0])
        # one run whose application-level offset sits exactly +2 sigma_A high
        run_spec = GeneratorSpec(
            n_runs=1, noniter=noniter, n_iter=10,
            iter_base=NormalParams(8.0 + 2 * sigma_a, 0.5), app_offset_scale=0.0,
            overhead_true=NormalParams(1.0, 0.0), seed=3 * seed + 1,
        )
        run = generate(run_spec)[0].runs[0]
        actual = run.wall_time_s
        fixed = run_trajectory(model, run, Variant.FIXED_A_MEAN, 4000, seed=3 * seed + 2)
        adaptive = run_trajectory(model, run, Variant.ADAPTIVE_A_MEAN, 4000, seed=3 * seed + 2)
        step = 4  # after job index 3: the first iterative job
        assert adaptive[step].after_job_index == 3
        recenter = abs(adaptive[step].p50 - actual) < abs(fixed[step].p50 - actual)
        cover = all(p.p10 <= actual <= p.p90 for p in adaptive[step + 1:])
        hits += recenter and cover
    report(5, "adaptive recentering", hits >= 90)


def test_criterion_6_estimator_correctness():
    m = fit(example_traces())
    checks = [
        (m.iter_pooled.loc, 4.0),
        (m.iter_pooled.scale, 1.632993161855452),
        (m.noniter[0].loc, 2.0),
        (m.noniter[0].scale, 1.4142135623730951),
        (m.a_mean.loc, 4.0),
        (m.a_mean.scale, 1.4142135623730951),
        (m.overhead.loc, 1.0),
        (m.overhead.scale, 0.0),
    ]
    ok = all(abs(got - want) <= 1e-9 for got, want in checks)
    report(6, "estimator correctness", ok)


def test_criterion_7_ingestion():
    lines = [
        json.dumps({"Event": "SparkListenerApplicationStart", "Timestamp": 0}),
        json.dumps({"Event": "SparkListenerJobStart", "Job ID": 0, "Submission Time": 1000}),
        json.dumps({"Event": "SparkListenerJobEnd", "Job ID": 0, "Completion Time": 5000}),
        json.dumps({"Event": "SparkListenerApplicationEnd", "Timestamp": 6000}),
    ]
    run = parse_event_log(lines)
    ok = (
        run.wall_time_s == 6.0
        and run.jobs[0].duration_s == 4.0
        and run.jobs[0].start_s == 1.0
        and run.jobs[0].end_s == 5.0
    )

    with pytest.raises(IncompleteJobError) as exc:
        parse_event_log(lines[:2] + [json.dumps({"Event": "SparkListenerApplicationEnd", "Timestamp": 9000})])
    ok = ok and exc.value.job_ids == [0]
    with pytest.raises(EventLogError):
        parse_event_log([])
    with pytest.raises(MalformedLineError) as exc2:
        parse_event_log([lines[0], "{nope", lines[3]])
    ok = ok and exc2.value.line_no == 2
    report(7, "ingestion", ok)


def _run_pipeline(base, env_extra):
    env = dict(os.environ)
    env.update(env_extra)
    spec = GeneratorSpec(
        n_runs=200,
        noniter=_NONITER_HEAVY_INIT,
        n_iter=19,
        iter_base=NormalParams(8.0, 0.3),
        app_offset_scale=0.05,
        overhead_true=NormalParams(1.0, 0.2),
        seed=42,
    )
    (base / "genspec.json").write_bytes(serialize_spec(spec))

    def cli(*args):
        result = subprocess.run(
            [sys.executable, "-m", "runtime_oracle", *args],
            capture_output=True, text=True, env=env,
        )
        assert result.returncode == 0, result.stderr
        return result.stdout

    cli("synth", "--input", str(base / "genspec.json"), "--output", str(base / "train"))
    cli("synth", "--input", str(base / "genspec.json"), "--seed", "43", "--output", str(base / "holdout"))
    cli("fit", "--input", str(base / "train" / "traces.json"), "--output", str(base / "model.json"))
    cli(
        "predict", "--input", str(base / "model.json"), "--model", "dependent",
        "--samples", "4000", "--seed", "7", "--output", str(base / "pred"),
    )
    cli(
        "online", "--input", str(base / "model.json"), str(base / "train" / "traces.json"),
        "--variant", "adaptive", "--samples", "2000", "--seed", "9",
        "--output", str(base / "trajectory.csv"),
    )
    cli(
        "compare", "--input", str(base / "pred" / "samples.txt"),
        str(base / "holdout" / "traces.json"), "--output", str(base / "cmp"),
    )
    return [
        "train/traces.json", "train/ground_truth.json", "holdout/traces.json",
        "model.json", "pred/samples.txt", "pred/ecdf.csv", "pred/summary.json",
        "trajectory.csv", "cmp/ecdf_predicted.csv", "cmp/ecdf_actual.csv",
        "cmp/ks.json", "cmp/overlay.svg",
    ]


def test_criterion_8_pipeline_determinism(tmp_path):
    one = tmp_path / "one"
    two = tmp_path / "two"
    one.mkdir()
    two.mkdir()
    files = _run_pipeline(one, {"OMP_NUM_THREADS": "1", "OPENBLAS_NUM_THREADS": "1"})
    _run_pipeline(two, {"OMP_NUM_THREADS": "4", "OPENBLAS_NUM_THREADS": "4"})
    ok = all((one / f).read_bytes() == (two / f).read_bytes() for f in files)

    # the predicted dependent distribution also has to sit close to the holdout
    ks = json.loads((one / "cmp" / "ks.json").read_text())["ks_distance"]
    ok = ok and ks < 0.15
    report(8, "pipeline determinism", ok)
