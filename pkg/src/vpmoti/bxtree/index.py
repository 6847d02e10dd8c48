"""The B^x-tree: time-bucketed, grid + curve keyed B+-tree of moving points."""

from __future__ import annotations

import math
from dataclasses import dataclass

from vpmoti.core import Circle, MovingPoint, RangeQuery, Rect, Vec2, contains, position_at
from vpmoti.storage import BufferPool

from .bplustree import BPlusTree, new_pool
from .curve import SpaceFillingCurve, ZCurve
from .vhist import VelocityHistogram, enlarge_query

OID_BITS = 32
OID_MASK = (1 << OID_BITS) - 1
BUCKET_BITS = 8


class LocatorError(KeyError):
    """An object id the index was asked about is not (or already) indexed."""


@dataclass(frozen=True)
class GridConfig:
    levels: int = 10
    hist_cells: int = 64
    max_update_interval: float = 120.0
    max_runs: int = 1024

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("grid levels must be >= 1")


@dataclass(frozen=True)
class TimeBucket:
    bucket_id: int
    label_time: float


def bucket_for(t_update: float, max_update_interval: float = 120.0) -> TimeBucket:
    """Bucket whose half-open span of width ``max_update_interval / 2`` holds
    ``t_update``; entries are indexed at the span's upper bound."""
    width = max_update_interval / 2.0
    b = int(math.floor(t_update / width))
    return TimeBucket(b, (b + 1) * width)


class BxTree:
    """Moving-object index over ``extent`` (the tree's own coordinate frame).

    Leaf entries keep the object's reference position, velocity and
    reference time, so candidates are verified against exactly the stored
    trajectory; the key is derived from the position at the bucket label time.

    Key layout, high to low: ``prefix | bucket | curve value | object id``.
    Several indexes may share one B+-tree under distinct prefixes; each then
    owns the key range of its prefix.
    """

    def __init__(
        self,
        extent: Rect,
        pool: BufferPool | None = None,
        grid: GridConfig = GridConfig(),
        curve: SpaceFillingCurve | None = None,
        tree: BPlusTree | None = None,
        prefix: int = 0,
    ):
        self.extent = extent
        self.grid = grid
        if tree is not None:
            if pool is not None and pool is not tree.pool:
                raise ValueError("shared tree lives in a different pool")
            pool = tree.pool
        self.pool = pool if pool is not None else new_pool()
        self.tree = tree if tree is not None else BPlusTree(self.pool, width=5)
        self.curve = curve if curve is not None else ZCurve(grid.levels)
        self.side = 1 << grid.levels
        self.cell_w = extent.width / self.side
        self.cell_h = extent.height / self.side
        self.curve_bits = 2 * grid.levels
        self.prefix_shift = self.curve_bits + BUCKET_BITS
        if self.prefix_shift + OID_BITS >= 64 or prefix >> (64 - OID_BITS - self.prefix_shift):
            raise ValueError("grid or prefix too large for 64-bit keys")
        self.prefix = prefix
        self.key_lo = (prefix << self.prefix_shift) << OID_BITS
        self.key_hi = (((prefix + 1) << self.prefix_shift) << OID_BITS) - 1
        self._keys: dict[int, int] = {}
        self._bucket_count: dict[int, int] = {}
        self._hists: dict[int, VelocityHistogram] = {}

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, oid: int) -> bool:
        return oid in self._keys

    # -- keys ---------------------------------------------------------------

    def cell_of(self, p) -> tuple[int, int]:
        last = self.side - 1
        cx = int(math.floor((p[0] - self.extent.lo[0]) / self.cell_w))
        cy = int(math.floor((p[1] - self.extent.lo[1]) / self.cell_h))
        return min(max(cx, 0), last), min(max(cy, 0), last)

    def key_for(self, o: MovingPoint, bucket: TimeBucket) -> int:
        return self._key_at(o.id, position_at(o, bucket.label_time), bucket.bucket_id)

    def _key_at(self, oid: int, p, bucket_id: int) -> int:
        cx, cy = self.cell_of(p)
        bx = (((self.prefix << BUCKET_BITS) | bucket_id) << self.curve_bits) | self.curve.encode(cx, cy)
        return (bx << OID_BITS) | oid

    def buckets(self) -> list[TimeBucket]:
        width = self.grid.max_update_interval / 2.0
        return [TimeBucket(b, (b + 1) * width) for b in sorted(self._bucket_count)]

    def histogram(self, bucket_id: int) -> VelocityHistogram | None:
        return self._hists.get(bucket_id)

    # -- updates ------------------------------------------------------------

    def insert(self, o: MovingPoint, now: float) -> None:
        if o.id in self._keys:
            raise LocatorError(f"object {o.id} already indexed")
        if not 0 <= o.id <= OID_MASK:
            raise ValueError(f"object id {o.id} does not fit in {OID_BITS} bits")
        bucket = bucket_for(now, self.grid.max_update_interval)
        dt = bucket.label_time - o.t_ref
        p = (o.pos[0] + o.vel[0] * dt, o.pos[1] + o.vel[1] * dt)
        if not 0 <= bucket.bucket_id < 1 << BUCKET_BITS:
            raise ValueError(f"bucket {bucket.bucket_id} overflows the key space")
        key = self._key_at(o.id, p, bucket.bucket_id)
        self.tree.insert(key, (o.pos[0], o.pos[1], o.vel[0], o.vel[1], o.t_ref))
        self._keys[o.id] = key
        b = bucket.bucket_id
        self._bucket_count[b] = self._bucket_count.get(b, 0) + 1
        hist = self._hists.get(b)
        if hist is None:
            hist = self._hists[b] = VelocityHistogram(self.extent, self.grid.hist_cells)
        hist.add(p[0], p[1], o.vel[0], o.vel[1])

    def delete(self, oid: int) -> MovingPoint:
        key = self._keys.pop(oid, None)
        if key is None:
            raise LocatorError(f"object {oid} not indexed")
        x, y, vx, vy, t_ref = self.tree.delete(key)
        b = (key >> (OID_BITS + self.curve_bits)) & ((1 << BUCKET_BITS) - 1)
        n = self._bucket_count[b] - 1
        if n:
            self._bucket_count[b] = n
        else:
            del self._bucket_count[b]
            del self._hists[b]
        return MovingPoint(oid, Vec2(x, y), Vec2(vx, vy), t_ref)

    def update(self, o: MovingPoint, now: float) -> None:
        self.delete(o.id)
        self.insert(o, now)

    def lookup(self, oid: int) -> MovingPoint | None:
        key = self._keys.get(oid)
        if key is None:
            return None
        val = self.tree.get(key)
        if val is None:
            return None
        x, y, vx, vy, t_ref = val
        return MovingPoint(oid, Vec2(x, y), Vec2(vx, vy), t_ref)

    # -- queries ------------------------------------------------------------

    def search_plan(self, q: RangeQuery) -> list[tuple[TimeBucket, Rect, list[tuple[int, int]]]]:
        """Per active bucket: the enlarged window and its curve runs."""
        plan = []
        for bucket in self.buckets():
            window = enlarge_query(q, bucket.label_time, self._hists[bucket.bucket_id])
            if window is None:
                continue
            window = window.inflate(1e-6)
            c0 = self.cell_of(window.lo)
            c1 = self.cell_of(window.hi)
            runs = self.curve.runs(c0[0], c1[0], c0[1], c1[1], self.grid.max_runs)
            plan.append((bucket, window, runs))
        return plan

    def key_ranges(self, q: RangeQuery) -> list[tuple[int, int]]:
        """Sorted, disjoint key ranges covering every candidate entry of ``q``."""
        shift = OID_BITS
        # buckets sit above the curve bits, so the ranges come out ascending
        ranges = []
        for bucket, _, runs in self.search_plan(q):
            base = ((self.prefix << BUCKET_BITS) | bucket.bucket_id) << self.curve_bits
            ranges += [(((base | lo) << shift), ((base | hi) << shift) | OID_MASK) for lo, hi in runs]
        return ranges

    def candidates(self, q: RangeQuery) -> list[MovingPoint]:
        """Every entry the enlarged windows reach (a superset of the answer)."""
        ranges = self.key_ranges(q)
        if not ranges:
            return []
        return [
            MovingPoint(key & OID_MASK, Vec2(x, y), Vec2(vx, vy), t_ref)
            for key, (x, y, vx, vy, t_ref) in self.tree.scan_ranges(ranges)
        ]

    def range_query(self, q: RangeQuery, now: float | None = None) -> set[int]:
        return {o.id for o in self.candidates(q) if contains(q, o)}

    def objects(self) -> list[MovingPoint]:
        return [
            MovingPoint(key & OID_MASK, Vec2(x, y), Vec2(vx, vy), t_ref)
            for key, (x, y, vx, vy, t_ref) in self.tree.scan_ranges([(self.key_lo, self.key_hi)])
        ]

    def check(self) -> None:
        """Audit the B+-tree and the id -> key table against each other."""
        self.tree.check()
        keys = [k for k, _ in self.tree.scan_ranges([(self.key_lo, self.key_hi)])]
        n = len(keys)
        if n != len(self._keys):
            raise LocatorError(f"tree holds {n} entries, key table {len(self._keys)}")
        if sorted(self._keys.values()) != keys:
            raise LocatorError("key table disagrees with the tree")
        if sum(self._bucket_count.values()) != n:
            raise LocatorError("bucket counts out of sync")


def query_mbr(q: RangeQuery) -> RangeQuery:
    """The same query with its shape replaced by the shape's bounding box."""
    if isinstance(q.shape, Circle):
        return RangeQuery(q.shape.bbox(), q.t1, q.t2, q.qvel)
    return q
