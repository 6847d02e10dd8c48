"""Brute-force ground truth for range queries."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from vpmoti.core import Circle, MovingPoint, RangeQuery, contains, query_bbox_at


class ObjectTable:
    """Live objects keyed by id; updates replace the stored trajectory."""

    def __init__(self, objects: Iterable[MovingPoint] = ()):
        self._rows: dict[int, MovingPoint] = {}
        self._arrays = None
        for o in objects:
            self.insert(o)

    def __len__(self) -> int:
        return len(self._rows)

    def __iter__(self):
        return iter(self._rows.values())

    def __contains__(self, oid: int) -> bool:
        return oid in self._rows

    def get(self, oid: int) -> MovingPoint:
        return self._rows[oid]

    def insert(self, o: MovingPoint) -> None:
        if o.id in self._rows:
            raise KeyError(f"duplicate object id {o.id}")
        self._rows[o.id] = o
        self._arrays = None

    def update(self, o: MovingPoint) -> None:
        if o.id not in self._rows:
            raise KeyError(f"unknown object id {o.id}")
        self._rows[o.id] = o
        self._arrays = None

    def delete(self, oid: int) -> MovingPoint:
        self._arrays = None
        return self._rows.pop(oid)

    def arrays(self):
        """``(objects, pos, vel, t_ref)`` as numpy columns, rebuilt after changes."""
        if self._arrays is None:
            objs = list(self._rows.values())
            pos = np.array([o.pos for o in objs], dtype=float).reshape(-1, 2)
            vel = np.array([o.vel for o in objs], dtype=float).reshape(-1, 2)
            tref = np.array([o.t_ref for o in objs], dtype=float)
            self._arrays = (objs, pos, vel, tref)
        return self._arrays


def oracle_range(table: Iterable[MovingPoint], q: RangeQuery) -> set[int]:
    """Ids of every object inside ``q`` at some time of its interval (linear scan)."""
    return {o.id for o in table if contains(q, o)}


def oracle_range_pruned(table: ObjectTable, q: RangeQuery) -> set[int]:
    """Same answer as ``oracle_range``, with a vectorized pre-pass.

    An object can only meet the query if the bounding box of its path over
    ``[t1, t2]`` meets the bounding box of everything the query region
    sweeps; survivors of that necessary test go through ``contains``.
    """
    objs, pos, vel, tref = table.arrays()
    if not objs:
        return set()
    b1 = query_bbox_at(q, q.t1)
    b2 = query_bbox_at(q, q.t2)
    qlo = np.minimum(b1.lo, b2.lo)
    qhi = np.maximum(b1.hi, b2.hi)
    p1 = pos + vel * (q.t1 - tref)[:, None]
    p2 = pos + vel * (q.t2 - tref)[:, None]
    lo = np.minimum(p1, p2)
    hi = np.maximum(p1, p2)
    pad = 1e-9 * (1.0 + np.abs(qlo).max() + np.abs(qhi).max())
    near = np.all((hi >= qlo - pad) & (lo <= qhi + pad), axis=1)
    return {objs[i].id for i in np.flatnonzero(near) if contains(q, objs[i])}


def sampled_contains(q: RangeQuery, o: MovingPoint, steps: int = 10_000) -> bool:
    """Containment by evaluating positions at ``steps + 1`` evenly spaced times.

    Deliberately shares no code with the closed-form test; it can miss a
    tangential touch that falls between two sample times.
    """
    n = steps if q.t2 > q.t1 else 0
    shape = q.shape
    for i in range(n + 1):
        t = q.t1 + (q.t2 - q.t1) * i / n if n else q.t1
        x = o.pos[0] + o.vel[0] * (t - o.t_ref)
        y = o.pos[1] + o.vel[1] * (t - o.t_ref)
        sx = q.qvel[0] * (t - q.t1)
        sy = q.qvel[1] * (t - q.t1)
        if isinstance(shape, Circle):
            if math.hypot(x - shape.center[0] - sx, y - shape.center[1] - sy) <= shape.radius:
                return True
        elif shape.lo[0] + sx <= x <= shape.hi[0] + sx and shape.lo[1] + sy <= y <= shape.hi[1] + sy:
            return True
    return False


def sampled_range(table: Iterable[MovingPoint], q: RangeQuery, steps: int = 10_000) -> set[int]:
    return {o.id for o in table if sampled_contains(q, o, steps)}
