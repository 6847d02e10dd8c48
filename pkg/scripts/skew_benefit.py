"""VP vs. unpartitioned query I/O on the two-axis workload, swept over
predictive time and v_max. Writes one CSV per sweep."""

import argparse
import dataclasses
import logging
from pathlib import Path

from vpmoti.bench import ExperimentSpec, emit_csv, run_experiment, run_predictive_sweep
from vpmoti.workload import WorkloadConfig


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--objects", type=int, default=50_000)
    p.add_argument("--queries", type=int, default=1000)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--jitter-deg", type=float, default=2.0)
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args.out_dir.mkdir(parents=True, exist_ok=True)

    spec = ExperimentSpec(
        workload=WorkloadConfig(n_objects=args.objects),
        n_queries=args.queries,
        reps=args.reps,
        jitter_deg=args.jitter_deg,
        allow_offrange=True,
        experiment_id="skew-predictive",
    )
    rows = []
    for rep in range(args.reps):
        rows += run_predictive_sweep(spec, [0, 20, 60, 120], rep)
    emit_csv(rows, args.out_dir / "skew_predictive.csv")

    vspec = dataclasses.replace(spec, sweep_var="v_max", sweep_values=(20, 100, 200), experiment_id="skew-vmax")
    emit_csv(run_experiment(vspec), args.out_dir / "skew_vmax.csv")

    for r in rows:
        print(f"{r.experiment_id} {r.sweep_value:>5} {r.mode:>6} {r.avg_query_logical_io:8.2f}")


if __name__ == "__main__":
    main()
