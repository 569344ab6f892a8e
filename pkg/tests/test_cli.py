import json
import subprocess
import sys

import pytest

from runtime_oracle.cli import main
from runtime_oracle.estimation import NormalParams, serialize_model, FittedModel
from runtime_oracle.predictor import parse_sample_lines
from runtime_oracle.synthgen import GeneratorSpec, serialize_spec
from runtime_oracle.trace_model import (
    ApplicationRun,
    JobKind,
    JobRecord,
    TraceSet,
    parse_traces,
    serialize_traces,
)


def write_genspec(path, n_runs=20, seed=42):
    spec = GeneratorSpec(
        n_runs=n_runs,
        noniter=(NormalParams(1.5, 0.2), NormalParams(2.5, 0.3)),
        n_iter=4,
        iter_base=NormalParams(8.0, 0.5),
        app_offset_scale=0.4,
        overhead_true=NormalParams(1.0, 0.2),
        seed=seed,
    )
    path.write_bytes(serialize_spec(spec))
    return spec


def zero_variance_model():
    return FittedModel(
        noniter={0: NormalParams(1.0, 0.0)},
        iter_pooled=NormalParams(2.0, 0.0),
        a_mean=NormalParams(2.0, 0.0),
        iter_scale_dep=0.0,
        overhead=NormalParams(0.5, 0.0),
        n_iter_jobs=3,
        n_runs=2,
    )


def serial_traces():
    def run(app_id, durations):
        jobs = []
        t = 0.0
        kinds = [JobKind.NON_ITERATIVE] + [JobKind.ITERATIVE] * (len(durations) - 1)
        for i, (d, k) in enumerate(zip(durations, kinds)):
            jobs.append(JobRecord(index=i, kind=k, start_s=t, end_s=t + d))
            t += d
        return ApplicationRun(app_id=app_id, wall_time_s=t + 0.5, jobs=tuple(jobs))

    return TraceSet(
        runs=(run("a", [1.0, 2.0, 2.5]), run("b", [1.2, 2.2, 2.4])),
        iterative_window=(1, 2),
    )


class TestExitCodes:
    def test_missing_input_file_is_2(self, tmp_path, capsys):
        rc = main(["fit", "--input", str(tmp_path / "nope.json"), "--output", str(tmp_path / "m.json")])
        assert rc == 2
        assert "not found" in capsys.readouterr().err

    def test_parse_failure_is_3(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        rc = main(["fit", "--input", str(bad), "--output", str(tmp_path / "m.json")])
        assert rc == 3
        assert "parse error" in capsys.readouterr().err

    def test_invariant_violation_is_4(self, tmp_path, capsys):
        one_run = TraceSet(runs=serial_traces().runs[:1], iterative_window=(1, 2))
        traces_file = tmp_path / "one.json"
        traces_file.write_bytes(serialize_traces(one_run))
        rc = main(["fit", "--input", str(traces_file), "--output", str(tmp_path / "m.json")])
        assert rc == 4
        assert "invariant" in capsys.readouterr().err

    def test_usage_error_is_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["predict", "--input", "x"])  # missing --output
        assert exc.value.code == 2

    def test_bad_window_format_is_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["ingest", "--input", str(tmp_path), "--window", "5", "--output", "o"])
        assert exc.value.code == 2


class TestIngestCommand:
    def write_log(self, path, n_jobs=3):
        lines = [json.dumps({"Event": "SparkListenerApplicationStart", "Timestamp": 0})]
        t = 0
        for j in range(n_jobs):
            lines.append(json.dumps({"Event": "SparkListenerJobStart", "Job ID": j, "Submission Time": t}))
            t += 1000
            lines.append(json.dumps({"Event": "SparkListenerJobEnd", "Job ID": j, "Completion Time": t}))
        lines.append(json.dumps({"Event": "SparkListenerApplicationEnd", "Timestamp": t + 500}))
        path.write_text("\n".join(lines) + "\n")

    def test_ingest_directory_of_logs(self, tmp_path, capsys):
        logs = tmp_path / "logs"
        logs.mkdir()
        for i in range(3):
            self.write_log(logs / f"app{i}.log")
        out = tmp_path / "traces.json"
        rc = main(["ingest", "--input", str(logs), "--window", "1:2", "--output", str(out)])
        assert rc == 0
        traces = parse_traces(out.read_bytes())
        assert len(traces.runs) == 3
        assert traces.iterative_window == (1, 2)


class TestPredictCommand:
    def test_zero_variance_summary_collapses(self, tmp_path, capsys):
        model_file = tmp_path / "model.json"
        model_file.write_bytes(serialize_model(zero_variance_model()))
        out = tmp_path / "pred"
        rc = main([
            "predict", "--input", str(model_file), "--model", "independent",
            "--samples", "500", "--seed", "3", "--output", str(out),
        ])
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["median"] == summary["p1"] == summary["p99"] == 7.5
        values = parse_sample_lines((out / "samples.txt").read_bytes())
        assert set(values.tolist()) == {7.5}
        assert "median=7.500" in capsys.readouterr().out

    def test_overhead_zero_flag(self, tmp_path):
        model_file = tmp_path / "model.json"
        model_file.write_bytes(serialize_model(zero_variance_model()))
        out = tmp_path / "pred"
        main([
            "predict", "--input", str(model_file), "--overhead", "zero",
            "--samples", "10", "--seed", "1", "--output", str(out),
        ])
        summary = json.loads((out / "summary.json").read_text())
        assert summary["median"] == 7.0  # the 0.5 overhead is pinned to zero

    def test_outputs_reparse(self, tmp_path):
        spec_file = tmp_path / "spec.json"
        write_genspec(spec_file)
        main(["synth", "--input", str(spec_file), "--output", str(tmp_path / "s")])
        main(["fit", "--input", str(tmp_path / "s" / "traces.json"), "--output", str(tmp_path / "m.json")])
        main([
            "predict", "--input", str(tmp_path / "m.json"), "--samples", "200",
            "--seed", "5", "--output", str(tmp_path / "p"),
        ])
        from runtime_oracle.estimation import parse_model

        parse_model((tmp_path / "m.json").read_bytes())
        parse_traces((tmp_path / "s" / "traces.json").read_bytes())
        values = parse_sample_lines((tmp_path / "p" / "samples.txt").read_bytes())
        assert len(values) == 200
        ecdf_lines = (tmp_path / "p" / "ecdf.csv").read_text().strip().split("\n")
        assert ecdf_lines[0] == "value,cum_fraction"
        assert len(ecdf_lines) == 201


class TestOnlineCommand:
    def test_trajectory_csv(self, tmp_path):
        model_file = tmp_path / "model.json"
        model_file.write_bytes(serialize_model(zero_variance_model()))
        traces_file = tmp_path / "traces.json"
        run_jobs = tuple(
            JobRecord(index=i, kind=k, start_s=float(i), end_s=float(i + 1))
            for i, k in enumerate(
                [JobKind.NON_ITERATIVE, JobKind.ITERATIVE, JobKind.ITERATIVE, JobKind.ITERATIVE]
            )
        )
        run = ApplicationRun(app_id="r", wall_time_s=4.5, jobs=run_jobs)
        traces_file.write_bytes(serialize_traces(TraceSet(runs=(run,))))
        out = tmp_path / "traj.csv"
        rc = main([
            "online", "--input", str(model_file), str(traces_file),
            "--variant", "adaptive", "--samples", "100", "--seed", "2",
            "--output", str(out),
        ])
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "after_job_index,p10,p20,p50,p80,p90,actual_total"
        assert len(lines) == 6  # prior + 4 jobs, plus header
        last = lines[-1].split(",")
        assert float(last[3]) == 4.5  # all jobs finished, overhead 0.5 -> 4.0+0.5

    def test_missing_second_input_is_4(self, tmp_path, capsys):
        model_file = tmp_path / "model.json"
        model_file.write_bytes(serialize_model(zero_variance_model()))
        rc = main(["online", "--input", str(model_file), "--output", str(tmp_path / "t.csv")])
        assert rc == 4


class TestCompareCommand:
    def test_sample_vs_itself_ks_zero(self, tmp_path, capsys):
        traces = serial_traces()
        traces_file = tmp_path / "traces.json"
        traces_file.write_bytes(serialize_traces(traces))
        sample_file = tmp_path / "sample.txt"
        sample_file.write_text("".join(f"{r.wall_time_s!r}\n" for r in traces.runs))
        out = tmp_path / "cmp"
        rc = main(["compare", "--input", str(sample_file), str(traces_file), "--output", str(out)])
        assert rc == 0
        ks = json.loads((out / "ks.json").read_text())["ks_distance"]
        assert ks == 0.0
        svg = (out / "overlay.svg").read_text()
        assert svg.startswith("<svg") and svg.count("<polyline") == 2

    def test_deterministic_outputs(self, tmp_path):
        spec_file = tmp_path / "spec.json"
        write_genspec(spec_file)
        for d in ("one", "two"):
            base = tmp_path / d
            main(["synth", "--input", str(spec_file), "--output", str(base / "s")])
            main(["fit", "--input", str(base / "s" / "traces.json"), "--output", str(base / "m.json")])
            main([
                "predict", "--input", str(base / "m.json"), "--samples", "300",
                "--seed", "11", "--output", str(base / "p"),
            ])
        for rel in ("s/traces.json", "s/ground_truth.json", "m.json", "p/samples.txt", "p/ecdf.csv", "p/summary.json"):
            assert (tmp_path / "one" / rel).read_bytes() == (tmp_path / "two" / rel).read_bytes()


class TestModuleEntry:
    def test_python_dash_m(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "runtime_oracle", "--version"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert "runtime-oracle" in result.stdout

    def test_log_env_var(self, tmp_path):
        spec_file = tmp_path / "spec.json"
        write_genspec(spec_file, n_runs=4)
        result = subprocess.run(
            [
                sys.executable, "-m", "runtime_oracle", "synth",
                "--input", str(spec_file), "--output", str(tmp_path / "out"),
            ],
            capture_output=True,
            text=True,
            env={"RUNTIME_ORACLE_LOG": "debug", "PATH": "/usr/bin:/bin", "HOME": "/root"},
        )
        assert result.returncode == 0
