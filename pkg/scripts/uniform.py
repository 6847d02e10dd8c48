"""VP overhead on a workload with no dominant direction."""

import argparse
import logging
from pathlib import Path

from vpmoti.bench import ExperimentSpec, emit_csv, run_experiment
from vpmoti.workload import WorkloadConfig

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--objects", type=int, default=50_000)
p.add_argument("--reps", type=int, default=1)
p.add_argument("--out", type=Path, default=Path("results/uniform.csv"))
args = p.parse_args()
logging.basicConfig(level=logging.INFO, format="%(message)s")
args.out.parent.mkdir(parents=True, exist_ok=True)

spec = ExperimentSpec(
    workload=WorkloadConfig(n_objects=args.objects), skew="uniform", reps=args.reps,
    allow_offrange=True, experiment_id="uniform",
)
rows = run_experiment(spec)
emit_csv(rows, args.out)
io = {r.mode: r.avg_query_logical_io for r in rows}
print(f"unpart {io['unpart']:.2f}  vp {io['vp']:.2f}  ratio {io['vp'] / io['unpart']:.3f}")
