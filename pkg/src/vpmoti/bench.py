"""Benchmark harness: unpartitioned vs. velocity-partitioned B^x-trees.

Each run generates a workload, loads the index at time 0, replays updates
until the warm-up ends (the build phase), resets the buffer counters, then
replays the remaining updates interleaved with the queries. Every mode gets
its own buffer pool.

Usage: ``python3 -m vpmoti.bench --mode both --objects 50000 --out rows.csv``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields

import numpy as np

from vpmoti.bxtree import BxTree, GridConfig, new_pool
from vpmoti.core import RangeQuery
from vpmoti.oracle import ObjectTable, oracle_range_pruned
from vpmoti.vpindex import VpConfig, VpIndex
from vpmoti.workload import OFFRANGE_LIMITS, Workload, WorkloadConfig, generate, parse_skew, sample_velocities

log = logging.getLogger("vpmoti.bench")

MODES = ("unpart", "vp")
SWEEP_VARS = ("skew", "n_objects", "v_max", "radius", "predictive_time", "shape")
_NUMERIC_SWEEPS = {"n_objects": int, "v_max": float, "radius": float, "predictive_time": float}


class VerificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    workload: WorkloadConfig = field(default_factory=lambda: WorkloadConfig(n_objects=50_000))
    mode: str = "both"
    k: int = 2
    sweep_var: str | None = None
    sweep_values: tuple = ()
    reps: int = 3
    seed: int = 0
    skew: str = "two-axis"
    jitter_deg: float = 2.0
    outlier_frac: float = 0.1
    n_queries: int = 1000
    shape: str = "circle"
    query_kind: str = "slice"
    verify: bool = False
    allow_offrange: bool = False
    fixed_tau: float | None = None
    sample_size: int = 10_000
    page_size: int = 4096
    buffer_pages: int = 50
    grid: GridConfig = field(default_factory=GridConfig)
    experiment_id: str = "exp"

    def modes(self) -> tuple[str, ...]:
        if self.mode == "both":
            return MODES
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        return (self.mode,)

    def validate(self) -> None:
        self.modes()
        if self.sweep_var is not None and self.sweep_var not in SWEEP_VARS:
            raise ValueError(f"unknown sweep variable {self.sweep_var!r}")
        if self.reps < 1 or self.n_queries < 1:
            raise ValueError("need at least one repetition and one query")
        if self.sweep_var in OFFRANGE_LIMITS and not self.allow_offrange:
            lo, hi = OFFRANGE_LIMITS[self.sweep_var]
            bad = [v for v in self.sweep_values if not lo <= float(v) <= hi]
            if bad:
                raise ValueError(f"{self.sweep_var} values {bad} outside [{lo}, {hi}]; pass --allow-offrange")


@dataclass(frozen=True)
class MetricsRow:
    experiment_id: str
    mode: str
    sweep_value: str
    avg_query_logical_io: float
    avg_query_physical_io: float
    avg_update_physical_io: float
    avg_query_time_us: float
    avg_update_time_us: float
    build_time_ms: float
    analyzer_time_ms: float


CSV_HEADER = [f.name for f in fields(MetricsRow)]


# -- one run --------------------------------------------------------------------


def _point_config(spec: ExperimentSpec, value, rep: int):
    """Workload config, skew name and query shape for one sweep point."""
    cfg = spec.workload.with_(seed=spec.seed + rep)
    skew, shape = spec.skew, spec.shape
    var = spec.sweep_var
    if var in _NUMERIC_SWEEPS:
        cfg = cfg.with_(**{var: _NUMERIC_SWEEPS[var](value)})
    elif var == "skew":
        skew = str(value)
    elif var == "shape":
        shape = str(value)
    return cfg, skew, shape


def make_workload(spec: ExperimentSpec, value=None, rep: int = 0) -> Workload:
    cfg, skew, shape = _point_config(spec, value, rep)
    axes, of = parse_skew(skew, spec.jitter_deg, spec.outlier_frac)
    return generate(cfg, axes, of, spec.n_queries, shape, spec.query_kind)


def _diff(q: RangeQuery, got: set[int], want: set[int], mode: str) -> str:
    missing = sorted(want - got)[:10]
    extra = sorted(got - want)[:10]
    return f"{mode}: query {q} missing {missing} extra {extra}"


def run_mode(spec: ExperimentSpec, mode: str, wl: Workload, sample: np.ndarray, fixed_tau=None) -> dict:
    """Replay one workload against one index; returns the averaged metrics."""
    return replay(spec, mode, wl, sample, fixed_tau)[""]


def replay(
    spec: ExperimentSpec,
    mode: str,
    wl: Workload,
    sample: np.ndarray,
    fixed_tau=None,
    query_sets: dict[str, list] | None = None,
) -> dict[str, dict]:
    """Replay updates with one or more labelled query lists interleaved.

    Queries never change the index, so query lists that differ only in a
    query parameter can share one replay; logical I/O is unaffected by the
    interleaving (physical I/O sees a shared buffer history).
    """
    cfg = wl.config
    if query_sets is None:
        query_sets = {"": wl.queries}
    pool = new_pool(spec.page_size, spec.buffer_pages)
    analyzer_ms = 0.0
    if mode == "vp":
        vcfg = VpConfig(k=spec.k, seed=spec.seed, v_max=cfg.v_max, fixed_tau=fixed_tau)
        t0 = time.perf_counter()
        index = VpIndex.build(sample, config=vcfg, domain=cfg.domain, grid=spec.grid, pool=pool, n_objects=cfg.n_objects)
        analyzer_ms = (time.perf_counter() - t0) * 1e3
    else:
        index = BxTree(cfg.domain.extent, pool, spec.grid)

    t0 = time.perf_counter()
    for o in wl.objects:
        index.insert(o, 0.0)
    build_ms = (time.perf_counter() - t0) * 1e3

    table = ObjectTable(wl.objects) if spec.verify else None
    updates = wl.updates
    ui = 0
    while ui < len(updates) and updates[ui][0] < cfg.warmup:
        t, o = updates[ui]
        index.update(o, t)
        if table is not None:
            table.update(o)
        ui += 1

    labels = list(query_sets)
    queries = sorted(
        ((t, j, i, q) for j, lab in enumerate(labels) for i, (t, q) in enumerate(query_sets[lab])),
        key=lambda e: (e[0], e[1], e[2]),
    )
    pool.reset_stats()
    stats = pool.stats
    q_log = [0] * len(labels)
    q_phys = [0] * len(labels)
    q_time = [0.0] * len(labels)
    u_phys = 0
    u_time = 0.0
    n_upd = 0
    clock = time.perf_counter
    qi = 0
    while qi < len(queries):
        # updates at or before the next query's issue time go first
        if ui < len(updates) and updates[ui][0] <= queries[qi][0]:
            t, o = updates[ui]
            r0, w0 = stats.physical_reads, stats.physical_writes
            c0 = clock()
            index.update(o, t)
            u_time += clock() - c0
            u_phys += stats.physical_reads - r0 + stats.physical_writes - w0
            n_upd += 1
            if table is not None:
                table.update(o)
            ui += 1
            continue
        t, j, _, q = queries[qi]
        l0, r0 = stats.logical_accesses, stats.physical_reads
        c0 = clock()
        got = index.range_query(q, t)
        q_time[j] += clock() - c0
        q_log[j] += stats.logical_accesses - l0
        q_phys[j] += stats.physical_reads - r0
        if table is not None:
            want = oracle_range_pruned(table, q)
            if got != want:
                raise VerificationError(_diff(q, got, want, mode))
        qi += 1
    out = {}
    for j, lab in enumerate(labels):
        nq = max(len(query_sets[lab]), 1)
        out[lab] = {
            "avg_query_logical_io": q_log[j] / nq,
            "avg_query_physical_io": q_phys[j] / nq,
            "avg_update_physical_io": u_phys / n_upd if n_upd else 0.0,
            "avg_query_time_us": q_time[j] / nq * 1e6,
            "avg_update_time_us": u_time / n_upd * 1e6 if n_upd else 0.0,
            "build_time_ms": build_ms,
            "analyzer_time_ms": analyzer_ms,
            "index": index,
        }
    return out


def run_experiment(spec: ExperimentSpec) -> list[MetricsRow]:
    """One row per (sweep value, mode), each averaged over the repetitions."""
    spec.validate()
    values = list(spec.sweep_values) if spec.sweep_var else [""]
    metric_names = CSV_HEADER[3:]
    rows = []
    for value in values:
        acc = {m: {k: 0.0 for k in metric_names} for m in spec.modes()}
        for rep in range(spec.reps):
            wl = make_workload(spec, value if spec.sweep_var else None, rep)
            sample = sample_velocities(wl.objects, spec.sample_size, seed=spec.seed + rep)
            for mode in spec.modes():
                log.info("sweep %s=%s rep %d mode %s", spec.sweep_var, value, rep, mode)
                res = run_mode(spec, mode, wl, sample, spec.fixed_tau)
                for k in metric_names:
                    acc[mode][k] += res[k] / spec.reps
        for mode in spec.modes():
            rows.append(MetricsRow(spec.experiment_id, mode, str(value), **acc[mode]))
    return rows


def run_predictive_sweep(spec: ExperimentSpec, values, rep: int = 0) -> list[MetricsRow]:
    """Predictive-time sweep sharing one update replay per mode.

    The workloads for the different predictive times share objects and
    updates (queries are drawn last from the seeded stream), so their query
    lists are interleaved into a single replay.
    """
    spec = dataclasses.replace(spec, sweep_var="predictive_time", sweep_values=tuple(values))
    spec.validate()
    wls = {str(v): make_workload(spec, v, rep) for v in values}
    base = next(iter(wls.values()))
    sample = sample_velocities(base.objects, spec.sample_size, seed=spec.seed + rep)
    rows = []
    for mode in spec.modes():
        res = replay(spec, mode, base, sample, spec.fixed_tau, {k: w.queries for k, w in wls.items()})
        for k in wls:
            m = {name: res[k][name] for name in CSV_HEADER[3:]}
            rows.append(MetricsRow(spec.experiment_id, mode, k, **m))
    return rows


# -- threshold sweep ----------------------------------------------------------------


@dataclass(frozen=True)
class TauSweepRow:
    label: str  # "fixed" or "auto"
    tau: str  # one value, or the per-axis thresholds joined by ";" for auto
    avg_query_io: float


def tau_grid(sample: np.ndarray, spec: ExperimentSpec, points: int = 20) -> list[float]:
    """Evenly spaced fixed thresholds up to the largest perpendicular speed
    any DVA partition sees in the sample."""
    vcfg = VpConfig(k=spec.k, seed=spec.seed, v_max=spec.workload.v_max)
    index = VpIndex.build(sample, config=vcfg)
    top = max(d.perp_hist.upper for d in index.dvas)
    return [top * (i + 1) / points for i in range(points)]


def run_tau_sweep(spec: ExperimentSpec, points: int = 20, grid: list[float] | None = None) -> list[TauSweepRow]:
    wl = make_workload(spec)
    sample = sample_velocities(wl.objects, spec.sample_size, seed=spec.seed)
    grid = grid if grid is not None else tau_grid(sample, spec, points)
    rows = []
    for tau in grid:
        res = run_mode(spec, "vp", wl, sample, fixed_tau=tau)
        rows.append(TauSweepRow("fixed", f"{tau:.6f}", res["avg_query_logical_io"]))
        log.info("tau %.3f -> %.3f", tau, res["avg_query_logical_io"])
    res = run_mode(spec, "vp", wl, sample)
    taus = ";".join(f"{d.tau:.6f}" for d in res["index"].dvas)
    rows.append(TauSweepRow("auto", taus, res["avg_query_logical_io"]))
    return rows


# -- CSV ---------------------------------------------------------------------------


def _open_out(path):
    return open(path, "w", newline="") if path != "-" else sys.stdout


def emit_csv(rows: list[MetricsRow], path) -> None:
    if not rows:
        raise ValueError("no rows to write")
    fh = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([getattr(r, name) for name in CSV_HEADER])
    finally:
        if fh is not sys.stdout:
            fh.close()


def read_csv(path) -> list[MetricsRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        out = []
        for rec in reader:
            vals = {k: rec[k] for k in CSV_HEADER[:3]}
            vals.update({k: float(rec[k]) for k in CSV_HEADER[3:]})
            out.append(MetricsRow(**vals))
        return out


def emit_tau_sweep(rows: list[TauSweepRow], path) -> None:
    if not rows:
        raise ValueError("no rows to write")
    fh = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "tau", "avg_query_io"])
        for r in rows:
            w.writerow([r.label, r.tau, r.avg_query_io])
    finally:
        if fh is not sys.stdout:
            fh.close()


# -- CLI ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    d = WorkloadConfig()
    p = argparse.ArgumentParser(prog="vpmoti-bench", description=__doc__.split("\n")[0])
    p.add_argument("--mode", choices=["unpart", "vp", "both"], default="both")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--objects", type=int, default=50_000)
    p.add_argument("--vmax", type=float, default=d.v_max)
    p.add_argument("--radius", type=float, default=d.radius)
    p.add_argument("--predictive", type=float, default=d.predictive_time)
    p.add_argument("--duration", type=float, default=d.duration)
    p.add_argument("--shape", choices=["circle", "rect"], default="circle")
    p.add_argument("--query-kind", choices=["slice", "interval", "moving"], default="slice")
    p.add_argument("--skew", default="two-axis", help="two-axis, four-axis, uniform or custom:<deg>:<weight>,...")
    p.add_argument("--jitter-deg", type=float, default=2.0)
    p.add_argument("--outlier-frac", type=float, default=ExperimentSpec.outlier_frac)
    p.add_argument("--queries", type=int, default=1000)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=int, default=None, help="defaults to $VPMOTI_SEED, then 0")
    p.add_argument("--sweep", choices=SWEEP_VARS, default=None)
    p.add_argument("--values", default="", help="comma-separated sweep values")
    p.add_argument("--verify", action="store_true", help="check every query against the brute-force oracle")
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    p.add_argument("--tau-sweep", action="store_true", help="fixed-threshold sweep plus the automatic threshold")
    p.add_argument("--tau-points", type=int, default=20)
    p.add_argument("--allow-offrange", action="store_true")
    p.add_argument("--experiment-id", default="exp")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def spec_from_args(args) -> ExperimentSpec:
    seed = args.seed if args.seed is not None else int(os.environ.get("VPMOTI_SEED", "0"))
    wcfg = WorkloadConfig(
        n_objects=args.objects,
        v_max=args.vmax,
        radius=args.radius,
        predictive_time=args.predictive,
        duration=args.duration,
        warmup=min(WorkloadConfig.warmup, args.duration),
    )
    values = tuple(v for v in args.values.split(",") if v) if args.sweep else ()
    if args.sweep and not values:
        raise ValueError("--sweep needs --values")
    return ExperimentSpec(
        workload=wcfg,
        mode=args.mode,
        k=args.k,
        sweep_var=args.sweep,
        sweep_values=values,
        reps=args.reps,
        seed=seed,
        skew=args.skew,
        jitter_deg=args.jitter_deg,
        outlier_frac=args.outlier_frac,
        n_queries=args.queries,
        shape=args.shape,
        query_kind=args.query_kind,
        verify=args.verify,
        allow_offrange=args.allow_offrange,
        experiment_id=args.experiment_id,
    )


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        spec = spec_from_args(args)
        spec.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    overrides = spec.workload.offrange()
    if overrides:
        log.warning("desk-scale overrides outside the benchmark ranges: %s", ", ".join(overrides))
    try:
        if args.tau_sweep:
            emit_tau_sweep(run_tau_sweep(spec, args.tau_points), args.out)
        else:
            emit_csv(run_experiment(spec), args.out)
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
