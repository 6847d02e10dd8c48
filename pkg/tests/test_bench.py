import dataclasses
import os
import subprocess
import sys

import numpy as np
import pytest

from vpmoti.bench import (
    CSV_HEADER,
    ExperimentSpec,
    MetricsRow,
    TauSweepRow,
    VerificationError,
    emit_csv,
    emit_tau_sweep,
    main,
    make_workload,
    read_csv,
    replay,
    run_experiment,
    run_mode,
    run_predictive_sweep,
    spec_from_args,
    _parser,
)
from vpmoti.workload import WorkloadConfig, sample_velocities

SMALL = ExperimentSpec(workload=WorkloadConfig(n_objects=3000), n_queries=60, reps=1)


def test_header_is_exact(tmp_path):
    assert CSV_HEADER == [
        "experiment_id", "mode", "sweep_value", "avg_query_logical_io", "avg_query_physical_io",
        "avg_update_physical_io", "avg_query_time_us", "avg_update_time_us", "build_time_ms", "analyzer_time_ms",
    ]
    path = tmp_path / "m.csv"
    emit_csv([MetricsRow("e", "vp", "1", *range(7))], path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)


def test_csv_round_trip(tmp_path):
    rows = [MetricsRow("x", m, "60", 1.5, 2.25, 3.0, 4.0, 5.0, 6.0, 7.125) for m in ("unpart", "vp")]
    path = tmp_path / "rows.csv"
    emit_csv(rows, path)
    assert read_csv(path) == rows
    with pytest.raises(ValueError):
        emit_csv([], path)


def test_tau_sweep_csv(tmp_path):
    path = tmp_path / "tau.csv"
    emit_tau_sweep([TauSweepRow("fixed", "1.000000", 3.5), TauSweepRow("auto", "2.0;3.0", 3.0)], path)
    assert path.read_text().splitlines() == ["label,tau,avg_query_io", "fixed,1.000000,3.5", "auto,2.0;3.0,3.0"]


def test_verified_run_matches_oracle():
    spec = dataclasses.replace(SMALL, workload=WorkloadConfig(n_objects=10_000), n_queries=200, verify=True)
    rows = run_experiment(spec)
    assert [r.mode for r in rows] == ["unpart", "vp"]
    for r in rows:
        assert r.avg_query_logical_io > 0 and r.avg_update_physical_io >= 0
    vp = next(r for r in rows if r.mode == "vp")
    assert 0 < vp.analyzer_time_ms < 1000


def test_verification_failure_is_reported(monkeypatch):
    import vpmoti.bench as bench

    monkeypatch.setattr(bench, "oracle_range_pruned", lambda table, q: {-5})
    with pytest.raises(VerificationError):
        run_experiment(dataclasses.replace(SMALL, verify=True, mode="unpart"))


def test_io_deterministic():
    a = run_experiment(SMALL)
    b = run_experiment(SMALL)
    for x, y in zip(a, b):
        assert x.avg_query_logical_io == y.avg_query_logical_io
        assert x.avg_query_physical_io == y.avg_query_physical_io
        assert x.avg_update_physical_io == y.avg_update_physical_io


def test_shared_replay_matches_separate_runs():
    spec = dataclasses.replace(SMALL, mode="vp")
    rows = {r.sweep_value: r for r in run_predictive_sweep(spec, [0, 60])}
    for v in (0, 60):
        wl = make_workload(dataclasses.replace(spec, sweep_var="predictive_time"), v)
        sample = sample_velocities(wl.objects, spec.sample_size, seed=spec.seed)
        alone = run_mode(spec, "vp", wl, sample)
        assert rows[str(v)].avg_query_logical_io == alone["avg_query_logical_io"]


def test_offrange_rejected():
    spec = dataclasses.replace(SMALL, sweep_var="radius", sweep_values=(500, 5000))
    with pytest.raises(ValueError, match="allow-offrange"):
        spec.validate()
    dataclasses.replace(spec, allow_offrange=True).validate()
    with pytest.raises(ValueError):
        dataclasses.replace(SMALL, sweep_var="colour").validate()
    with pytest.raises(ValueError):
        dataclasses.replace(SMALL, mode="rtree").validate()


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("VPMOTI_SEED", "41")
    assert spec_from_args(_parser().parse_args([])).seed == 41
    assert spec_from_args(_parser().parse_args(["--seed", "3"])).seed == 3
    monkeypatch.delenv("VPMOTI_SEED")
    assert spec_from_args(_parser().parse_args([])).seed == 0


def test_cli_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main([
        "--objects", "2000", "--queries", "30", "--reps", "1", "--sweep", "radius",
        "--values", "100,1000", "--out", str(out), "--verify",
    ])
    assert code == 0
    rows = read_csv(out)
    assert [(r.sweep_value, r.mode) for r in rows] == [("100", "unpart"), ("100", "vp"), ("1000", "unpart"), ("1000", "vp")]
    assert rows[0].avg_query_logical_io < rows[2].avg_query_logical_io


def test_cli_rejects_offrange(capsys):
    assert main(["--sweep", "v_max", "--values", "500", "--objects", "100"]) == 1
    assert "allow-offrange" in capsys.readouterr().err


def test_cli_subprocess_exit_code(tmp_path):
    env = dict(os.environ, VPMOTI_SEED="5")
    out = tmp_path / "o.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "vpmoti.bench", "--objects", "1000", "--queries", "20", "--reps", "1",
         "--mode", "vp", "--out", str(out)],
        env=env, capture_output=True, text=True, timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().splitlines()[0] == ",".join(CSV_HEADER)


def test_cli_tau_sweep(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["--objects", "2000", "--queries", "30", "--tau-sweep", "--tau-points", "3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "label,tau,avg_query_io"
    assert [l.split(",")[0] for l in lines[1:]] == ["fixed"] * 3 + ["auto"]
