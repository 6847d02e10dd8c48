"""Synthetic axis-skewed moving-object workloads.

Each object follows one velocity class: a dominant axis (either direction,
Gaussian angular jitter) or the isotropic outlier class. Speeds are uniform
on ``(0, v_max]``. Objects bounce off the domain edges: whenever a new
velocity would carry an object outside before its next update, it is
reversed.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, TextIO

import numpy as np

from vpmoti.core import Circle, Domain, MovingPoint, RangeQuery, Rect, Vec2, position_at

HEADER = "#vpmoti-workload v1"

OFFRANGE_LIMITS = {
    "n_objects": (100_000, 500_000),
    "v_max": (20.0, 200.0),
    "radius": (100.0, 1000.0),
    "predictive_time": (0.0, 120.0),
}


@dataclass(frozen=True)
class AxisSpec:
    angle: float  # radians
    weight: float
    jitter_sigma: float = 0.0  # radians


@dataclass(frozen=True)
class WorkloadConfig:
    domain: Domain = field(default_factory=Domain)
    n_objects: int = 100_000
    v_max: float = 100.0
    max_update_interval: float = 120.0
    radius: float = 500.0
    rect_side: float = 1000.0
    predictive_time: float = 60.0
    interval_length: float = 10.0
    duration: float = 240.0
    # queries start once every object has reported at least once
    warmup: float = 120.0
    p_switch: float = 0.05
    seed: int = 0

    def offrange(self) -> list[str]:
        """Names of fields outside the benchmark's parameter ranges."""
        bad = []
        for name, (lo, hi) in OFFRANGE_LIMITS.items():
            v = getattr(self, name)
            if not lo <= v <= hi:
                bad.append(name)
        return bad

    def with_(self, **kw) -> "WorkloadConfig":
        return replace(self, **kw)


def two_axis(jitter_deg: float = 2.0, outlier_frac: float = 0.1, angles_deg=(0.0, 90.0)) -> list[AxisSpec]:
    w = (1.0 - outlier_frac) / len(angles_deg)
    return [AxisSpec(math.radians(a), w, math.radians(jitter_deg)) for a in angles_deg]


def four_axis(jitter_deg: float = 2.0, outlier_frac: float = 0.1) -> list[AxisSpec]:
    return two_axis(jitter_deg, outlier_frac, (0.0, 45.0, 90.0, 135.0))


def parse_skew(spec: str, jitter_deg: float = 2.0, outlier_frac: float = 0.1) -> tuple[list[AxisSpec], float]:
    """Axis mixture from a skew name.

    ``two-axis``, ``four-axis``, ``uniform``, or ``custom:<angle>:<weight>[,...]``
    with angles in degrees; in the custom form the outlier fraction is
    whatever weight remains.
    """
    if spec == "two-axis":
        return two_axis(jitter_deg, outlier_frac), outlier_frac
    if spec == "four-axis":
        return four_axis(jitter_deg, outlier_frac), outlier_frac
    if spec == "uniform":
        return [], 1.0
    if spec.startswith("custom:"):
        axes = []
        for item in spec[len("custom:") :].split(","):
            angle, weight = item.split(":")
            axes.append(AxisSpec(math.radians(float(angle)), float(weight), math.radians(jitter_deg)))
        rest = 1.0 - sum(a.weight for a in axes)
        if rest < -1e-9:
            raise ValueError(f"axis weights exceed 1 in {spec!r}")
        return axes, max(rest, 0.0)
    raise ValueError(f"unknown skew {spec!r}")


class _Mixture:
    def __init__(self, axes: list[AxisSpec], outlier_frac: float, v_max: float, rng: np.random.Generator):
        total = sum(a.weight for a in axes) + outlier_frac
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"axis weights plus outlier fraction sum to {total}, not 1")
        self.axes = axes
        self.probs = np.array([a.weight for a in axes] + [outlier_frac])
        self.v_max = v_max
        self.rng = rng

    def draw_class(self) -> int:
        """Axis index, or ``len(axes)`` for the isotropic class."""
        return int(self.rng.choice(len(self.probs), p=self.probs))

    def draw_velocity(self, cls: int) -> Vec2:
        rng = self.rng
        speed = self.v_max * (1.0 - rng.random())  # (0, v_max]
        if cls == len(self.axes):
            theta = rng.uniform(0.0, 2 * math.pi)
        else:
            ax = self.axes[cls]
            theta = ax.angle + (math.pi if rng.random() < 0.5 else 0.0)
            if ax.jitter_sigma > 0:
                theta += rng.normal(0.0, ax.jitter_sigma)
        return Vec2(speed * math.cos(theta), speed * math.sin(theta))


def _exit_time(pos, vel, extent: Rect) -> float:
    """Time until a point moving at ``vel`` leaves ``extent``."""
    t = math.inf
    for i in (0, 1):
        if vel[i] > 0:
            t = min(t, (extent.hi[i] - pos[i]) / vel[i])
        elif vel[i] < 0:
            t = min(t, (extent.lo[i] - pos[i]) / vel[i])
    return max(t, 0.0)


def _keep_inside(pos: Vec2, vel: Vec2, gap: float, extent: Rect) -> tuple[Vec2, float]:
    """Velocity and gap that keep the object inside until its next update.

    A velocity that would exit is reversed, which keeps the object on its
    axis. Near a corner both directions may exit; then the longer-lived one
    is kept and the next update is pulled forward to the boundary.
    """
    t_fwd = _exit_time(pos, vel, extent)
    if t_fwd >= gap:
        return vel, gap
    back = Vec2(-vel[0], -vel[1])
    t_back = _exit_time(pos, back, extent)
    if t_back >= gap:
        return back, gap
    vel, t = (vel, t_fwd) if t_fwd >= t_back else (back, t_back)
    return vel, max(t, 1e-6)


@dataclass
class Workload:
    config: WorkloadConfig
    objects: list[MovingPoint]
    updates: list[tuple[float, MovingPoint]]
    queries: list[tuple[float, RangeQuery]]
    classes: list[int] = field(default_factory=list)


def gen_objects(
    cfg: WorkloadConfig,
    axes: list[AxisSpec],
    outlier_frac: float,
    rng: np.random.Generator | None = None,
    labels: list[int] | None = None,
) -> list[MovingPoint]:
    """Objects at ``t_ref = 0`` spread uniformly over the domain.

    With ``labels`` given, each object's velocity class is appended to it.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    mix = _Mixture(axes, outlier_frac, cfg.v_max, rng)
    ext = cfg.domain.extent
    out = []
    for i in range(cfg.n_objects):
        pos = Vec2(rng.uniform(ext.lo[0], ext.hi[0]), rng.uniform(ext.lo[1], ext.hi[1]))
        cls = mix.draw_class()
        out.append(MovingPoint(i, pos, mix.draw_velocity(cls), 0.0))
        if labels is not None:
            labels.append(cls)
    return out


def gen_update_stream(
    cfg: WorkloadConfig,
    objects: list[MovingPoint],
    axes: list[AxisSpec],
    outlier_frac: float,
    classes: list[int] | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[list[MovingPoint], list[tuple[float, MovingPoint]]]:
    """Velocity updates over ``[0, duration]`` in time order.

    Gaps between an object's updates are uniform on ``(0, max_update_interval]``,
    shortened only when an object would otherwise leave the domain. Initial
    velocities are adjusted the same way, so the adjusted initial objects are
    returned too.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed + 1)
    mix = _Mixture(axes, outlier_frac, cfg.v_max, rng)
    ext = cfg.domain.extent
    mui = cfg.max_update_interval
    if classes is None:
        classes = [mix.draw_class() for _ in objects]
    classes = list(classes)
    start = []
    heap: list[tuple[float, int]] = []
    current: dict[int, MovingPoint] = {}
    for o, cls in zip(objects, classes):
        # objects are mid-trip at the start: the first wait follows the
        # residual-life law of uniform gaps, so the update rate is flat
        gap = mui * (1.0 - math.sqrt(1.0 - rng.random()))
        vel, gap = _keep_inside(o.pos, o.vel, max(gap, 1e-6), ext)
        o = MovingPoint(o.id, o.pos, vel, o.t_ref)
        start.append(o)
        current[o.id] = o
        heapq.heappush(heap, (o.t_ref + gap, o.id))
    cls_of = {o.id: c for o, c in zip(objects, classes)}
    stream = []
    while heap and heap[0][0] <= cfg.duration:
        t, oid = heapq.heappop(heap)
        old = current[oid]
        pos = position_at(old, t)
        pos = Vec2(min(max(pos[0], ext.lo[0]), ext.hi[0]), min(max(pos[1], ext.lo[1]), ext.hi[1]))
        cls = cls_of[oid]
        if rng.random() < cfg.p_switch:
            cls = mix.draw_class()
            cls_of[oid] = cls
        gap = mui * (1.0 - rng.random())
        vel, gap = _keep_inside(pos, mix.draw_velocity(cls), gap, ext)
        new = MovingPoint(oid, pos, vel, t)
        current[oid] = new
        stream.append((t, new))
        heapq.heappush(heap, (t + gap, oid))
    return start, stream


def gen_queries(
    cfg: WorkloadConfig,
    n_queries: int,
    shape: str = "circle",
    time_kind: str = "slice",
    rng: np.random.Generator | None = None,
) -> list[tuple[float, RangeQuery]]:
    """Queries issued uniformly over ``[warmup, duration]``, sorted by issue time.

    Query time is the issue time plus a predictive offset uniform on
    ``[0, predictive_time]``; interval and moving queries last
    ``interval_length``; moving queries travel at up to ``v_max``.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed + 2)
    ext = cfg.domain.extent
    out = []
    for _ in range(n_queries):
        issue = float(rng.uniform(min(cfg.warmup, cfg.duration), cfg.duration))
        t1 = issue + float(rng.uniform(0.0, cfg.predictive_time))
        c = Vec2(rng.uniform(ext.lo[0], ext.hi[0]), rng.uniform(ext.lo[1], ext.hi[1]))
        if shape == "circle":
            region = Circle(c, cfg.radius)
        elif shape == "rect":
            h = cfg.rect_side / 2.0
            region = Rect(Vec2(c[0] - h, c[1] - h), Vec2(c[0] + h, c[1] + h))
        else:
            raise ValueError(f"unknown query shape {shape!r}")
        if time_kind == "slice":
            q = RangeQuery.slice(region, t1)
        elif time_kind == "interval":
            q = RangeQuery.interval(region, t1, t1 + cfg.interval_length)
        elif time_kind == "moving":
            theta = rng.uniform(0.0, 2 * math.pi)
            s = cfg.v_max * rng.random()
            qv = Vec2(s * math.cos(theta), s * math.sin(theta))
            if qv == Vec2(0.0, 0.0):
                qv = Vec2(1.0, 0.0)
            q = RangeQuery.moving(region, t1, t1 + cfg.interval_length, qv)
        else:
            raise ValueError(f"unknown query kind {time_kind!r}")
        out.append((issue, q))
    out.sort(key=lambda e: e[0])
    return out


def generate(
    cfg: WorkloadConfig,
    axes: list[AxisSpec],
    outlier_frac: float,
    n_queries: int = 1000,
    shape: str = "circle",
    time_kind: str = "slice",
) -> Workload:
    rng = np.random.default_rng(cfg.seed)
    classes: list[int] = []
    objs = gen_objects(cfg, axes, outlier_frac, rng, classes)
    objs, updates = gen_update_stream(cfg, objs, axes, outlier_frac, classes, rng)
    queries = gen_queries(cfg, n_queries, shape, time_kind, rng)
    return Workload(cfg, objs, updates, queries, classes)


def sample_velocities(objects: list[MovingPoint], n: int = 10_000, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(objects), size=min(n, len(objects)), replace=False)
    return np.array([objects[i].vel for i in idx], dtype=float)


# -- text format ------------------------------------------------------------------


def _f(v: float) -> str:
    return f"{v:.6f}"


def _query_fields(q: RangeQuery) -> list[str]:
    if isinstance(q.shape, Circle):
        shape = ["circle", _f(q.shape.center[0]), _f(q.shape.center[1]), _f(q.shape.radius)]
    else:
        shape = ["rect", *map(_f, (*q.shape.lo, *q.shape.hi))]
    kind = q.kind
    out = [kind, *shape, _f(q.t1)]
    if kind != "slice":
        out.append(_f(q.t2))
    if kind == "moving":
        out += [_f(q.qvel[0]), _f(q.qvel[1])]
    return out


def write_workload(fh: TextIO, objects: Iterable[MovingPoint], updates=(), queries=()) -> None:
    """Line records: ``O id x y vx vy tref``, ``U t id x y vx vy`` and
    ``Q t kind shape params t1 [t2] [qvx qvy]``; events sorted by time."""
    fh.write(HEADER + "\n")
    for o in objects:
        fh.write(" ".join(["O", str(o.id), *map(_f, (*o.pos, *o.vel, o.t_ref))]) + "\n")
    events = [(t, 0, i, "U") for i, (t, _) in enumerate(updates)] + [(t, 1, i, "Q") for i, (t, _) in enumerate(queries)]
    events.sort()
    updates = list(updates)
    queries = list(queries)
    for t, _, i, tag in events:
        if tag == "U":
            o = updates[i][1]
            fh.write(" ".join(["U", _f(t), str(o.id), *map(_f, (*o.pos, *o.vel))]) + "\n")
        else:
            fh.write(" ".join(["Q", _f(t), *_query_fields(queries[i][1])]) + "\n")


def read_workload(fh: TextIO):
    """Parse a workload file into ``(objects, updates, queries)``."""
    first = fh.readline().strip()
    if first != HEADER:
        raise ValueError(f"not a workload file (header {first!r})")
    objects, updates, queries = [], [], []
    for lineno, line in enumerate(fh, start=2):
        parts = line.split()
        if not parts:
            continue
        tag = parts[0]
        try:
            if tag == "O":
                oid = int(parts[1])
                x, y, vx, vy, tref = map(float, parts[2:7])
                objects.append(MovingPoint(oid, Vec2(x, y), Vec2(vx, vy), tref))
            elif tag == "U":
                t = float(parts[1])
                oid = int(parts[2])
                x, y, vx, vy = map(float, parts[3:7])
                updates.append((t, MovingPoint(oid, Vec2(x, y), Vec2(vx, vy), t)))
            elif tag == "Q":
                queries.append((float(parts[1]), _parse_query(parts[2:])))
            else:
                raise ValueError(f"unknown record tag {tag!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    return objects, updates, queries


def _parse_query(f: list[str]) -> RangeQuery:
    kind, shape = f[0], f[1]
    if shape == "circle":
        region = Circle(Vec2(float(f[2]), float(f[3])), float(f[4]))
        rest = f[5:]
    elif shape == "rect":
        region = Rect(Vec2(float(f[2]), float(f[3])), Vec2(float(f[4]), float(f[5])))
        rest = f[6:]
    else:
        raise ValueError(f"unknown shape {shape!r}")
    t1 = float(rest[0])
    if kind == "slice":
        return RangeQuery.slice(region, t1)
    t2 = float(rest[1])
    if kind == "interval":
        return RangeQuery.interval(region, t1, t2)
    if kind == "moving":
        return RangeQuery.moving(region, t1, t2, Vec2(float(rest[2]), float(rest[3])))
    raise ValueError(f"unknown query kind {kind!r}")
