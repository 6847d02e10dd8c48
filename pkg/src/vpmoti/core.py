"""Geometry and kinematics for moving points.

Positions are in meters, velocities in meters per timestamp (m/ts). Objects
follow the linear motion model ``pos(t) = pos + vel * (t - t_ref)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union


class _XY(NamedTuple):
    x: float
    y: float


class Vec2(_XY):
    __slots__ = ()

    def __new__(cls, x: float, y: float):
        x = float(x)
        y = float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite vector component: ({x}, {y})")
        return tuple.__new__(cls, (x, y))

    def __add__(self, other):  # type: ignore[override]
        return Vec2(self[0] + other[0], self[1] + other[1])

    def __sub__(self, other):
        return Vec2(self[0] - other[0], self[1] - other[1])

    def __mul__(self, c):  # type: ignore[override]
        return Vec2(self[0] * c, self[1] * c)

    __rmul__ = __mul__

    def dot(self, other) -> float:
        return self[0] * other[0] + self[1] * other[1]

    def norm(self) -> float:
        return math.hypot(self[0], self[1])


ZERO = Vec2(0.0, 0.0)


class MovingPoint(NamedTuple):
    id: int
    pos: Vec2
    vel: Vec2
    t_ref: float


def position_at(o: MovingPoint, t: float) -> Vec2:
    dt = t - o.t_ref
    return Vec2(o.pos[0] + o.vel[0] * dt, o.pos[1] + o.vel[1] * dt)


@dataclass(frozen=True)
class Rotation:
    """Orthonormal frame ``(u, u_perp)`` with ``u_perp`` = ``u`` turned +90 degrees."""

    u: Vec2

    def __post_init__(self):
        n = self.u.norm()
        if abs(n - 1.0) > 1e-12:
            object.__setattr__(self, "u", Vec2(self.u[0] / n, self.u[1] / n))

    @property
    def u_perp(self) -> Vec2:
        return Vec2(-self.u[1], self.u[0])

    @classmethod
    def from_angle(cls, theta: float) -> "Rotation":
        return cls(Vec2(math.cos(theta), math.sin(theta)))

    @property
    def angle(self) -> float:
        return math.atan2(self.u[1], self.u[0])


IDENTITY = Rotation(Vec2(1.0, 0.0))


def rotate_to_frame(p, r: Rotation) -> Vec2:
    ux, uy = r.u
    return Vec2(p[0] * ux + p[1] * uy, -p[0] * uy + p[1] * ux)


def rotate_from_frame(p, r: Rotation) -> Vec2:
    ux, uy = r.u
    return Vec2(p[0] * ux - p[1] * uy, p[0] * uy + p[1] * ux)


def rotate_point(o: MovingPoint, r: Rotation) -> MovingPoint:
    return MovingPoint(o.id, rotate_to_frame(o.pos, r), rotate_to_frame(o.vel, r), o.t_ref)


def perp_distance(v, mean, u) -> float:
    """Distance from velocity point ``v`` to the line through ``mean`` along unit ``u``."""
    dx = v[0] - mean[0]
    dy = v[1] - mean[1]
    return abs(-dx * u[1] + dy * u[0])


# --- query regions ---------------------------------------------------------


@dataclass(frozen=True)
class Circle:
    center: Vec2
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"circle radius must be positive, got {self.radius}")

    def bbox(self) -> "Rect":
        cx, cy = self.center
        r = self.radius
        return Rect(Vec2(cx - r, cy - r), Vec2(cx + r, cy + r))


@dataclass(frozen=True)
class Rect:
    lo: Vec2
    hi: Vec2

    def __post_init__(self):
        if self.lo[0] > self.hi[0] or self.lo[1] > self.hi[1]:
            raise ValueError(f"inverted rectangle {self.lo} .. {self.hi}")

    @classmethod
    def from_bounds(cls, x0: float, y0: float, x1: float, y1: float) -> "Rect":
        return cls(Vec2(x0, y0), Vec2(x1, y1))

    def bbox(self) -> "Rect":
        return self

    @property
    def width(self) -> float:
        return self.hi[0] - self.lo[0]

    @property
    def height(self) -> float:
        return self.hi[1] - self.lo[1]

    @property
    def area(self) -> float:
        return self.width * self.height

    def corners(self) -> list[Vec2]:
        (x0, y0), (x1, y1) = self.lo, self.hi
        return [Vec2(x0, y0), Vec2(x1, y0), Vec2(x1, y1), Vec2(x0, y1)]

    def contains_point(self, p) -> bool:
        return self.lo[0] <= p[0] <= self.hi[0] and self.lo[1] <= p[1] <= self.hi[1]

    def inflate(self, m: float) -> "Rect":
        return Rect(Vec2(self.lo[0] - m, self.lo[1] - m), Vec2(self.hi[0] + m, self.hi[1] + m))


Shape = Union[Circle, Rect]


@dataclass(frozen=True)
class Domain:
    extent: Rect = Rect(Vec2(0.0, 0.0), Vec2(100_000.0, 100_000.0))

    def __post_init__(self):
        if not (self.extent.width > 0 and self.extent.height > 0):
            raise ValueError("degenerate domain extent")

    def contains(self, p) -> bool:
        return self.extent.contains_point(p)

    def rotated_bounds(self, r: Rotation) -> Rect:
        """Axis-aligned bounding rectangle of this domain expressed in frame ``r``."""
        pts = [rotate_to_frame(c, r) for c in self.extent.corners()]
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return Rect(Vec2(min(xs), min(ys)), Vec2(max(xs), max(ys)))


@dataclass(frozen=True)
class RangeQuery:
    """A range query over ``[t1, t2]``; a time-slice query has ``t1 == t2``.

    For moving queries the shape translates by ``qvel * (t - t1)``.
    """

    shape: Shape
    t1: float
    t2: float
    qvel: Vec2 = ZERO

    def __post_init__(self):
        if self.t1 > self.t2:
            raise ValueError(f"interval with t1 > t2: {self.t1} > {self.t2}")

    @classmethod
    def slice(cls, shape: Shape, t: float) -> "RangeQuery":
        return cls(shape, t, t)

    @classmethod
    def interval(cls, shape: Shape, t1: float, t2: float) -> "RangeQuery":
        return cls(shape, t1, t2)

    @classmethod
    def moving(cls, shape: Shape, t1: float, t2: float, qvel: Vec2) -> "RangeQuery":
        return cls(shape, t1, t2, qvel)

    @property
    def kind(self) -> str:
        if self.t1 == self.t2:
            return "slice"
        if self.qvel == ZERO:
            return "interval"
        return "moving"

    def shape_at(self, t: float) -> Shape:
        """The query region at time ``t`` (translated for moving queries)."""
        dt = t - self.t1
        off = Vec2(self.qvel[0] * dt, self.qvel[1] * dt)
        if isinstance(self.shape, Circle):
            return Circle(self.shape.center + off, self.shape.radius)
        return Rect(self.shape.lo + off, self.shape.hi + off)


def contains(q: RangeQuery, o: MovingPoint) -> bool:
    """Whether ``o`` lies inside ``q``'s region at some time in ``[t1, t2]``."""
    t1 = q.t1
    dt = t1 - o.t_ref
    px = o.pos[0] + o.vel[0] * dt
    py = o.pos[1] + o.vel[1] * dt
    span = q.t2 - t1
    wx = o.vel[0] - q.qvel[0]
    wy = o.vel[1] - q.qvel[1]
    shape = q.shape
    if type(shape) is Circle:
        dx = px - shape.center[0]
        dy = py - shape.center[1]
        r2 = shape.radius * shape.radius
        if span > 0.0:
            ww = wx * wx + wy * wy
            if ww > 0.0:
                s = -(dx * wx + dy * wy) / ww
                if s > span:
                    s = span
                if s > 0.0:
                    dx += wx * s
                    dy += wy * s
        return dx * dx + dy * dy <= r2

    # rectangle: per-axis window of relative offsets s in [0, span]
    s_lo = 0.0
    s_hi = span
    for a, w, lo, hi in ((px, wx, shape.lo[0], shape.hi[0]), (py, wy, shape.lo[1], shape.hi[1])):
        if w == 0.0 or span == 0.0:
            if a < lo or a > hi:
                return False
            continue
        e0 = (lo - a) / w
        e1 = (hi - a) / w
        if e0 > e1:
            e0, e1 = e1, e0
        if e0 > s_lo:
            s_lo = e0
        if e1 < s_hi:
            s_hi = e1
        if s_lo > s_hi:
            return False
    return True


def query_bbox_at(q: RangeQuery, t: float) -> Rect:
    return q.shape_at(t).bbox()
