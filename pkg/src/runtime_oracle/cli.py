"""Command-line front end: ingest, fit, predict, online, synth, compare.

Every command writes its outputs atomically and is byte-reproducible for
identical flags and seed. Exit codes: 0 success, 2 missing input file or
usage error, 3 parse failure, 4 invariant violation.

RUNTIME_ORACLE_LOG={error,warn,info,debug} controls diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .errors import ParseError, ValidationError
from .estimation import fit, parse_model, serialize_model
from .online import Variant, run_trajectory, trajectory_csv_bytes
from .predictor import (
    DEFAULT_SAMPLES,
    ModelKind,
    ecdf,
    ecdf_csv_bytes,
    ks_distance,
    parse_sample_lines,
    quantile,
    sample_app,
    sample_lines_bytes,
)
from .spark_ingest import ingest_directory
from .synthgen import generate, parse_spec, serialize_ground_truth
from .trace_model import parse_traces, serialize_traces

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_MISSING_FILE = 2
EXIT_PARSE = 3
EXIT_INVARIANT = 4

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _configure_logging():
    level_name = os.environ.get("RUNTIME_ORACLE_LOG", "warn").lower()
    level = _LOG_LEVELS.get(level_name, logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _write_atomic(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.tmp-{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _read_bytes(path: Path) -> bytes:
    return Path(path).read_bytes()


def _check_inputs_exist(paths):
    for p in paths:
        if not Path(p).exists():
            raise FileNotFoundError(f"input not found: {p}")


def _window(text: str) -> tuple[int, int]:
    try:
        first, last = text.split(":")
        return int(first), int(last)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be FIRST:LAST, got {text!r}") from None


def _expand_inputs(paths) -> list[Path]:
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.is_file()))
        else:
            out.append(p)
    return out


def cmd_ingest(args) -> int:
    _check_inputs_exist(args.input)
    paths = _expand_inputs(args.input)
    traces = ingest_directory(paths, args.window)
    _write_atomic(Path(args.output), serialize_traces(traces))
    print(f"ingested {len(traces.runs)} run(s) -> {args.output}")
    for w in traces.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_fit(args) -> int:
    _check_inputs_exist(args.input)
    traces = parse_traces(_read_bytes(Path(args.input[0])))
    model = fit(traces)
    _write_atomic(Path(args.output), serialize_model(model))
    print(f"fitted {model.n_runs} runs, {model.n_iter_jobs} iterative jobs -> {args.output}")
    print(f"  iter_pooled     loc={model.iter_pooled.loc:.6f} scale={model.iter_pooled.scale:.6f}")
    print(f"  a_mean          loc={model.a_mean.loc:.6f} scale={model.a_mean.scale:.6f}")
    print(f"  iter_scale_dep  {model.iter_scale_dep:.6f}")
    print(f"  overhead        loc={model.overhead.loc:.6f} scale={model.overhead.scale:.6f}")
    for k in model.noniter_indices():
        p = model.noniter[k]
        print(f"  noniter[{k}]      loc={p.loc:.6f} scale={p.scale:.6f}")
    return EXIT_OK


def _load_model(path: Path, overhead_mode: str):
    model = parse_model(_read_bytes(path))
    if overhead_mode == "zero":
        model = model.without_overhead()
    return model


def cmd_predict(args) -> int:
    _check_inputs_exist(args.input)
    model = _load_model(Path(args.input[0]), args.overhead)
    kind = ModelKind(args.model)
    sample = sample_app(model, kind, args.samples, args.seed)

    out = Path(args.output)
    _write_atomic(out / "samples.txt", sample_lines_bytes(sample))
    _write_atomic(out / "ecdf.csv", ecdf_csv_bytes(ecdf(sample)))
    summary = {
        "model": kind.value,
        "samples": args.samples,
        "seed": args.seed,
        "median": quantile(sample, 0.5),
        "p1": quantile(sample, 0.01),
        "p99": quantile(sample, 0.99),
        "negative_samples": sample.negative_count(),
    }
    _write_atomic(out / "summary.json", (json.dumps(summary, indent=2) + "\n").encode())
    print(
        f"median={summary['median']:.3f} p1={summary['p1']:.3f} p99={summary['p99']:.3f} "
        f"({kind.value}, s={args.samples}, seed={args.seed})"
    )
    return EXIT_OK


def cmd_online(args) -> int:
    if len(args.input) < 2:
        raise ValidationError("online needs two inputs: the model file and the traces file")
    _check_inputs_exist(args.input)
    model = _load_model(Path(args.input[0]), args.overhead)
    traces = parse_traces(_read_bytes(Path(args.input[1])))
    if not traces.runs:
        raise ValidationError("traces file contains no runs to replay")
    run = traces.runs[0]
    points = run_trajectory(model, run, Variant(args.variant), args.samples, args.seed)
    _write_atomic(Path(args.output), trajectory_csv_bytes(points, run.wall_time_s))
    print(
        f"trajectory for {run.app_id} ({len(points)} points, {args.variant}) -> {args.output}"
    )
    return EXIT_OK


def cmd_synth(args) -> int:
    _check_inputs_exist(args.input)
    spec = parse_spec(_read_bytes(Path(args.input[0])))
    if args.seed is not None:
        from dataclasses import replace

        spec = replace(spec, seed=args.seed)
    traces, truth = generate(spec)
    out = Path(args.output)
    _write_atomic(out / "traces.json", serialize_traces(traces))
    _write_atomic(out / "ground_truth.json", serialize_ground_truth(truth))
    print(f"generated {len(traces.runs)} run(s) -> {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    if len(args.input) < 2:
        raise ValidationError("compare needs two inputs: the sample file and the actual traces file")
    _check_inputs_exist(args.input)
    sample_values = parse_sample_lines(_read_bytes(Path(args.input[0])))
    traces = parse_traces(_read_bytes(Path(args.input[1])))
    if not traces.runs:
        raise ValidationError("traces file contains no runs to compare against")
    actual = [r.wall_time_s for r in traces.runs]

    predicted_ecdf = ecdf(sample_values)
    actual_ecdf = ecdf(actual)
    ks = ks_distance(sample_values, actual)

    out = Path(args.output)
    _write_atomic(out / "ecdf_predicted.csv", ecdf_csv_bytes(predicted_ecdf))
    _write_atomic(out / "ecdf_actual.csv", ecdf_csv_bytes(actual_ecdf))
    _write_atomic(out / "ks.json", (json.dumps({"ks_distance": ks}, indent=2) + "\n").encode())
    _write_atomic(out / "overlay.svg", _ecdf_overlay_svg(predicted_ecdf, actual_ecdf))
    print(f"ks={ks:.6f} ({len(sample_values)} predicted vs {len(actual)} actual) -> {out}")
    return EXIT_OK


def _ecdf_overlay_svg(predicted, actual, width=640, height=420) -> bytes:
    """Two ECDF step polylines on shared axes. Quantitative output lives in the CSVs."""
    pad = 50.0
    lo = min(predicted.values[0], actual.values[0])
    hi = max(predicted.values[-1], actual.values[-1])
    span = (hi - lo) or 1.0

    def x(v):
        return pad + (v - lo) / span * (width - 2 * pad)

    def y(f):
        return height - pad - f * (height - 2 * pad)

    def polyline(e, color):
        pts = [f"{x(e.values[0]):.2f},{y(0.0):.2f}"]
        prev = 0.0
        for v, f in zip(e.values.tolist(), e.fractions.tolist()):
            pts.append(f"{x(v):.2f},{y(prev):.2f}")
            pts.append(f"{x(v):.2f},{y(f):.2f}")
            prev = f
        pts.append(f"{x(hi):.2f},{y(1.0):.2f}")
        return (
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{" ".join(pts)}"/>'
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{pad}" y="{height - pad + 20}" font-size="11">{lo:.2f}</text>',
        f'<text x="{width - pad - 30}" y="{height - pad + 20}" font-size="11">{hi:.2f}</text>',
        f'<text x="{pad - 35}" y="{height - pad}" font-size="11">0.0</text>',
        f'<text x="{pad - 35}" y="{pad + 4}" font-size="11">1.0</text>',
        f'<text x="{width / 2 - 60}" y="{height - 12}" font-size="12">run time (s)</text>',
        polyline(predicted, "#1f77b4"),
        polyline(actual, "#000000"),
        f'<text x="{width - pad - 120}" y="{pad}" font-size="12" fill="#1f77b4">predicted</text>',
        f'<text x="{width - pad - 120}" y="{pad + 16}" font-size="12" fill="#000000">actual</text>',
        "</svg>",
    ]
    return ("\n".join(parts) + "\n").encode("utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="runtime-oracle",
        description="Model and predict iterative big-data application run time from job traces.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, *, window=False, model=False, variant=False,
            sampling=False, overhead=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", nargs="+", required=True, help="input path(s)")
        p.add_argument("--output", required=True, help="output file or directory")
        if window:
            p.add_argument("--window", type=_window, required=True, metavar="FIRST:LAST",
                           help="inclusive iterative job-index window")
        if model:
            p.add_argument("--model", choices=["independent", "dependent"], default="dependent")
        if variant:
            p.add_argument("--variant", choices=["fixed", "adaptive"], default="fixed")
        if sampling:
            p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, metavar="N")
            p.add_argument("--seed", type=int, default=0, metavar="N")
        if overhead:
            p.add_argument("--overhead", choices=["fitted", "zero"], default="fitted")
        p.set_defaults(func=func)
        return p

    add("ingest", cmd_ingest, "parse Spark event logs into a canonical traces file", window=True)
    add("fit", cmd_fit, "estimate model parameters from a traces file")
    add("predict", cmd_predict, "sample the full-application run-time distribution",
        model=True, sampling=True, overhead=True)
    add("online", cmd_online, "replay a run, re-predicting the total after every job",
        variant=True, sampling=True, overhead=True)
    synth = sub.add_parser("synth", help="generate synthetic traces from a generator spec")
    synth.add_argument("--input", nargs="+", required=True)
    synth.add_argument("--output", required=True)
    synth.add_argument("--seed", type=int, default=None, help="override the spec's seed")
    synth.set_defaults(func=cmd_synth)
    add("compare", cmd_compare, "compare a predicted sample against actual traces (ECDFs + KS)")
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MISSING_FILE


def run():
    sys.exit(main())
