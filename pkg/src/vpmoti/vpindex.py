"""Velocity-partitioned index manager.

One B^x-tree per dominant velocity axis, each indexing objects rotated into
that axis' frame, plus an outlier B^x-tree in the world frame. A locator
table maps every object id to its partition.

The partition trees live in one paged B+-tree, each under its own key
prefix, the same way the B^x-tree keeps its time buckets apart. A query
gathers every partition's key ranges and walks them with a single cursor,
so the shared upper levels are read once per query rather than once per
partition.

Concurrency: one writer, any number of readers, serialized by the caller. An
update holds the writer role for its delete and insert, so readers never see
an object missing or indexed twice.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from vpmoti.analyzer import (
    DvaDescriptor,
    PerpSpeedHistogram,
    perp_distances,
    tau_from_histogram,
    velocity_partitioning,
)
from vpmoti.bxtree import BPlusTree, BxTree, GridConfig, LocatorError, new_pool
from vpmoti.bxtree.bplustree import leaf_capacity
from vpmoti.bxtree.index import OID_BITS, OID_MASK
from vpmoti.core import (
    Circle,
    Domain,
    MovingPoint,
    RangeQuery,
    Rect,
    Rotation,
    Vec2,
    contains,
    perp_distance,
    rotate_point,
    rotate_to_frame,
)
from vpmoti.costmodel import TauCostParams
from vpmoti.storage import BufferPool

OUTLIER = -1


@dataclass(frozen=True)
class VpConfig:
    k: int = 2
    buckets: int = 100
    refresh_period: int = 10_000
    window: int = 100_000
    seed: int = 0
    max_iters: int = 100
    restarts: int = 8
    through_origin: bool = False
    # upper bound of the running perpendicular-speed histograms
    v_max: float = 100.0
    # overrides every computed threshold (fixed-threshold sweeps); disables refresh
    fixed_tau: float | None = None


def rotated_query(q: RangeQuery, r: Rotation, pad: float = 1e-6) -> RangeQuery:
    """Axis-aligned bounding query of ``q`` in frame ``r``."""
    shape = q.shape
    if isinstance(shape, Circle):
        c = rotate_to_frame(shape.center, r)
        rad = shape.radius + pad
        box = Rect(Vec2(c[0] - rad, c[1] - rad), Vec2(c[0] + rad, c[1] + rad))
    else:
        pts = [rotate_to_frame(p, r) for p in shape.corners()]
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        box = Rect(Vec2(min(xs) - pad, min(ys) - pad), Vec2(max(xs) + pad, max(ys) + pad))
    return RangeQuery(box, q.t1, q.t2, rotate_to_frame(q.qvel, r))


class VpIndex:
    def __init__(
        self,
        dvas: list[DvaDescriptor],
        domain: Domain = Domain(),
        grid: GridConfig = GridConfig(),
        config: VpConfig = VpConfig(),
        pool: BufferPool | None = None,
        cost_params: TauCostParams | None = None,
    ):
        self.domain = domain
        self.grid = grid
        self.config = config
        self.pool = pool if pool is not None else new_pool()
        self.dvas = dvas
        self.cost_params = cost_params
        self.rotations = [Rotation(d.u) for d in dvas]
        self.store = BPlusTree(self.pool, width=5)
        # prefix 0 is the outlier partition, DVA i uses prefix i + 1
        self.outlier_tree = BxTree(domain.extent, grid=grid, tree=self.store, prefix=0)
        self.dva_trees = [
            BxTree(domain.rotated_bounds(r), grid=grid, tree=self.store, prefix=i + 1)
            for i, r in enumerate(self.rotations)
        ]
        self._prefix_shift = self.outlier_tree.prefix_shift + OID_BITS
        self.locator: dict[int, int] = {}
        self._objects: dict[int, MovingPoint] = {}
        if config.fixed_tau is not None:
            for d in dvas:
                d.tau = config.fixed_tau
        self.running = [PerpSpeedHistogram.build([], config.buckets, config.v_max) for _ in dvas]
        self._recent: deque[tuple[int, int]] = deque()
        self.updates_since_refresh = 0
        self.refreshes = 0

    @classmethod
    def build(
        cls,
        sample,
        k: int | None = None,
        config: VpConfig = VpConfig(),
        domain: Domain = Domain(),
        grid: GridConfig = GridConfig(),
        pool: BufferPool | None = None,
        n_objects: int | None = None,
    ) -> "VpIndex":
        """Analyze a velocity sample and lay out the (empty) partitioned index."""
        k = config.k if k is None else k
        pts = np.asarray(sample, dtype=float).reshape(-1, 2)
        dvas, _ = velocity_partitioning(
            pts,
            k,
            seed=config.seed,
            buckets=config.buckets,
            max_iters=config.max_iters,
            through_origin=config.through_origin,
            restarts=config.restarts,
        )
        n = n_objects or len(pts)
        speeds = np.hypot(pts[:, 0], pts[:, 1])
        v_top = float(speeds.max()) if len(pts) else config.v_max
        n_l = leaf_capacity(pool.page_size if pool is not None else 4096, 5)
        params = TauCostParams.estimate(domain.extent.area, n, n_l, max(v_top, 1e-9), max(v_top, 1e-9))
        index = cls(dvas, domain, grid, config, pool, params)
        index.seed_running(pts)
        return index

    # -- routing ------------------------------------------------------------

    def nearest_dva(self, vel) -> tuple[int, float]:
        best, best_d = 0, math.inf
        for i, d in enumerate(self.dvas):
            dist = perp_distance(vel, d.mean, d.u)
            if dist < best_d:
                best, best_d = i, dist
        return best, best_d

    def route(self, vel) -> int:
        """Partition for a velocity: the nearest DVA unless beyond its threshold."""
        if not self.dvas:
            return OUTLIER
        i, dist = self.nearest_dva(vel)
        return OUTLIER if dist > self.dvas[i].tau else i

    def tree_of(self, pid: int) -> BxTree:
        return self.outlier_tree if pid == OUTLIER else self.dva_trees[pid]

    def trees(self) -> list[BxTree]:
        return [*self.dva_trees, self.outlier_tree]

    # -- running threshold statistics ------------------------------------------

    def seed_running(self, sample) -> None:
        pts = np.asarray(sample, dtype=float).reshape(-1, 2)
        if not self.dvas or len(pts) == 0:
            return
        dist = np.stack([perp_distances(pts, d.mean, d.u) for d in self.dvas], axis=1)
        nearest = dist.argmin(axis=1)
        for i, s in zip(nearest.tolist(), dist[np.arange(len(pts)), nearest].tolist()):
            self._record(i, s)

    def _record(self, i: int, speed: float) -> None:
        hist = self.running[i]
        b = hist.bucket_of(speed)
        hist.counts[b] += 1
        self._recent.append((i, b))
        if len(self._recent) > self.config.window:
            j, ob = self._recent.popleft()
            self.running[j].counts[ob] -= 1

    def refresh_tau(self) -> list[float]:
        """Recompute every threshold from the running histograms.

        New thresholds apply to later insertions; resident objects move on
        their next update.
        """
        if self.config.fixed_tau is None:
            for d, hist in zip(self.dvas, self.running):
                if hist.total:
                    d.tau, _ = tau_from_histogram(hist, hist.max_speed())
        self.updates_since_refresh = 0
        self.refreshes += 1
        return [d.tau for d in self.dvas]

    # -- updates ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.locator)

    def __contains__(self, oid: int) -> bool:
        return oid in self.locator

    def insert(self, o: MovingPoint, now: float) -> int:
        if o.id in self.locator:
            raise LocatorError(f"object {o.id} already indexed")
        if self.dvas:
            i, dist = self.nearest_dva(o.vel)
            self._record(i, dist)
            pid = OUTLIER if dist > self.dvas[i].tau else i
        else:
            pid = OUTLIER
        if pid == OUTLIER:
            self.outlier_tree.insert(o, now)
        else:
            self.dva_trees[pid].insert(rotate_point(o, self.rotations[pid]), now)
        self.locator[o.id] = pid
        self._objects[o.id] = o
        return pid

    def delete(self, oid: int) -> MovingPoint:
        pid = self.locator.get(oid)
        if pid is None:
            raise LocatorError(f"object {oid} not indexed")
        self.tree_of(pid).delete(oid)
        del self.locator[oid]
        return self._objects.pop(oid)

    def update(self, o: MovingPoint, now: float) -> int:
        self.delete(o.id)
        pid = self.insert(o, now)
        self.updates_since_refresh += 1
        if self.updates_since_refresh >= self.config.refresh_period:
            self.refresh_tau()
        return pid

    # -- queries --------------------------------------------------------------

    def partition_candidates(self, q: RangeQuery, pid: int) -> set[int]:
        """Ids one partition returns for ``q`` before the final containment filter."""
        if pid == OUTLIER:
            return self.outlier_tree.range_query(q)
        return self.dva_trees[pid].range_query(rotated_query(q, self.rotations[pid]))

    def range_query(self, q: RangeQuery, now: float | None = None) -> set[int]:
        # partitions in prefix order keep the combined ranges ascending
        ranges = self.outlier_tree.key_ranges(q)
        for r, tree in zip(self.rotations, self.dva_trees):
            ranges += tree.key_ranges(rotated_query(q, r))
        if not ranges:
            return set()
        out = set()
        objects = self._objects
        shift = self._prefix_shift
        for key, (x, y, vx, vy, t_ref) in self.store.scan_ranges(ranges):
            oid = key & OID_MASK
            if key >> shift == 0:
                o = MovingPoint(oid, Vec2(x, y), Vec2(vx, vy), t_ref)
            else:
                # entries of a DVA partition are stored rotated; test the original
                o = objects[oid]
            if contains(q, o):
                out.add(oid)
        return out

    def objects(self) -> list[MovingPoint]:
        return list(self._objects.values())

    # -- audits and export ------------------------------------------------------

    def audit(self) -> None:
        """Check that locator, trees and object table agree exactly."""
        seen: dict[int, int] = {}
        for pid, tree in [(i, t) for i, t in enumerate(self.dva_trees)] + [(OUTLIER, self.outlier_tree)]:
            tree.check()
            for o in tree.objects():
                if o.id in seen:
                    raise LocatorError(f"object {o.id} in partitions {seen[o.id]} and {pid}")
                seen[o.id] = pid
        if seen != self.locator:
            raise LocatorError("locator disagrees with tree contents")
        if set(self._objects) != set(self.locator):
            raise LocatorError("object table disagrees with locator")
        if sum(len(t) for t in self.trees()) != len(self.locator):
            raise LocatorError("tree cardinalities do not sum to the locator size")

    def export_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "partition_id", "x", "y", "vx", "vy", "t_ref"])
            for oid in sorted(self.locator):
                o = self._objects[oid]
                w.writerow([oid, self.locator[oid], *(f"{v:.6f}" for v in (*o.pos, *o.vel, o.t_ref))])
