"""Velocity scatter of a generated workload, labelled by DVA partition
(-1 marks outliers), for plotting the analyzer's output."""

import argparse
from pathlib import Path

import numpy as np

from vpmoti.analyzer import perp_distances, velocity_partitioning
from vpmoti.workload import WorkloadConfig, gen_objects, parse_skew, sample_velocities

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--skew", default="two-axis")
p.add_argument("--jitter-deg", type=float, default=2.0)
p.add_argument("--outlier-frac", type=float, default=0.1)
p.add_argument("--k", type=int, default=2)
p.add_argument("--samples", type=int, default=10_000)
p.add_argument("--seed", type=int, default=0)
p.add_argument("--out", type=Path, default=Path("results/dva_scatter.csv"))
args = p.parse_args()
args.out.parent.mkdir(parents=True, exist_ok=True)

axes, of = parse_skew(args.skew, args.jitter_deg, args.outlier_frac)
cfg = WorkloadConfig(n_objects=args.samples, seed=args.seed)
objs = gen_objects(cfg, axes, of, np.random.default_rng(args.seed))
pts = sample_velocities(objs, args.samples, args.seed)
descs, _ = velocity_partitioning(pts, args.k, seed=args.seed)

# label each point the way the index would route it
dist = np.stack([perp_distances(pts, d.mean, d.u) for d in descs], axis=1)
nearest = dist.argmin(axis=1)
label = np.where(dist[np.arange(len(pts)), nearest] > np.array([d.tau for d in descs])[nearest], -1, nearest)
with open(args.out, "w") as fh:
    fh.write("vx,vy,partition_id\n")
    for (vx, vy), lab in zip(pts, label):
        fh.write(f"{vx:.6f},{vy:.6f},{lab}\n")
for i, d in enumerate(descs):
    print(f"DVA {i}: angle {np.degrees(np.arctan2(d.u.y, d.u.x)):.2f} deg, tau {d.tau:.3f}, members {(label == i).sum()}")
print(f"outliers: {(label == -1).sum()}")
