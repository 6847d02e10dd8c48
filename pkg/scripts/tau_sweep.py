"""Query I/O under fixed thresholds against the automatically chosen one."""

import argparse
import logging
from pathlib import Path

from vpmoti.bench import ExperimentSpec, emit_tau_sweep, run_tau_sweep
from vpmoti.workload import WorkloadConfig

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--objects", type=int, default=20_000)
p.add_argument("--points", type=int, default=20)
p.add_argument("--queries", type=int, default=1000)
p.add_argument("--out", type=Path, default=Path("results/tau_sweep.csv"))
args = p.parse_args()
logging.basicConfig(level=logging.INFO, format="%(message)s")
args.out.parent.mkdir(parents=True, exist_ok=True)

spec = ExperimentSpec(workload=WorkloadConfig(n_objects=args.objects), n_queries=args.queries, reps=1, mode="vp")
rows = run_tau_sweep(spec, args.points)
emit_tau_sweep(rows, args.out)
best = min((r for r in rows if r.label == "fixed"), key=lambda r: r.avg_query_io)
auto = rows[-1]
print(f"best fixed tau {best.tau}: {best.avg_query_io:.2f}; auto ({auto.tau}): {auto.avg_query_io:.2f}")
