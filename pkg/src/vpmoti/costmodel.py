"""Node-access estimation over moving rectangles and the closed-form
search-space expansion algebra for partitioned vs. unpartitioned indexes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class MovingRect:
    """Rectangle ``mbr = (x-, x+, y-, y+)`` whose sides move with ``vbr``."""

    mbr: tuple[float, float, float, float]
    vbr: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        m, v = self.mbr, self.vbr
        if m[0] > m[1] or m[2] > m[3]:
            raise ValueError(f"inverted MBR {m}")
        if v[0] > v[1] or v[2] > v[3]:
            raise ValueError(f"inverted VBR {v}")

    def at(self, t: float) -> tuple[float, float, float, float]:
        m, v = self.mbr, self.vbr
        return (m[0] + v[0] * t, m[1] + v[1] * t, m[2] + v[2] * t, m[3] + v[3] * t)

    def area_at(self, t: float) -> float:
        x0, x1, y0, y1 = self.at(t)
        return max(x1 - x0, 0.0) * max(y1 - y0, 0.0)


@dataclass(frozen=True)
class TauCostParams:
    """Geometry behind the expansion-rate objective: leaf side ``d`` (m),
    axis speed bounds (m/ts), object count ``n`` and objects per leaf ``n_l``."""

    d: float
    v_xmax: float
    v_ymax: float
    n: float
    n_l: float

    def __post_init__(self):
        if min(self.d, self.v_xmax, self.v_ymax, self.n, self.n_l) <= 0:
            raise ValueError("all TauCostParams fields must be positive")

    @classmethod
    def estimate(cls, area: float, n: int, n_l: float, v_xmax: float, v_ymax: float) -> "TauCostParams":
        """Leaf side from uniformly spread locations: ``d = sqrt(area * n_l / n)``."""
        return cls(math.sqrt(area * n_l / n), v_xmax, v_ymax, float(n), float(n_l))


@dataclass(frozen=True)
class ExpansionParams:
    d: float
    v: float
    t_h: float

    def __post_init__(self):
        if self.d <= 0 or self.v <= 0 or self.t_h < 0:
            raise ValueError("need d > 0, v > 0, t_h >= 0")


def transform_node(n: MovingRect, q: MovingRect) -> MovingRect:
    """Node inflated by half the query extent, moving relative to the query."""
    qw = (q.mbr[1] - q.mbr[0]) / 2.0
    qh = (q.mbr[3] - q.mbr[2]) / 2.0
    m, v, qv = n.mbr, n.vbr, q.vbr
    mbr = (m[0] - qw, m[1] + qw, m[2] - qh, m[3] + qh)
    vbr = (v[0] - qv[1], v[1] - qv[0], v[2] - qv[3], v[3] - qv[2])
    return MovingRect(mbr, vbr)


def _side_pieces(lo: float, hi: float, vlo: float, vhi: float, t_end: float):
    """Side length ``a + b t`` on ``[0, t_cut]``, clamped at zero after inversion."""
    a = hi - lo
    b = vhi - vlo
    if b >= 0:
        return a, b, t_end
    return a, b, min(t_end, a / -b)


def sweep_volume(n: MovingRect, q_t: float) -> float:
    """Integral of the moving rectangle's area over ``[0, q_t]``, exactly.

    The area is the product of two linear side lengths, each clamped at zero
    once its sides cross, so the integral is a cubic up to the first crossing.
    """
    if q_t < 0:
        raise ValueError("q_t must be >= 0")
    m, v = n.mbr, n.vbr
    a1, b1, c1 = _side_pieces(m[0], m[1], v[0], v[1], q_t)
    a2, b2, c2 = _side_pieces(m[2], m[3], v[2], v[3], q_t)
    t = min(c1, c2)
    # integral of (a1 + b1 s)(a2 + b2 s) ds from 0 to t
    return a1 * a2 * t + 0.5 * (a1 * b2 + a2 * b1) * t * t + b1 * b2 * t**3 / 3.0


def estimate_node_accesses(nodes, q: MovingRect, q_t: float, extent: tuple[float, float] = (1.0, 1.0)) -> float:
    """Expected node accesses: summed sweep volumes of the transformed nodes,
    in coordinates normalized by the data-space ``extent`` (width, height)."""
    sx, sy = extent
    total = 0.0
    for n in nodes:
        t = transform_node(n, q)
        m, v = t.mbr, t.vbr
        norm = MovingRect((m[0] / sx, m[1] / sx, m[2] / sy, m[3] / sy), (v[0] / sx, v[1] / sx, v[2] / sy, v[3] / sy))
        total += sweep_volume(norm, q_t)
    return total


# -- expansion of one node: all objects on two perpendicular axes ----------------


def area_unpart(p: ExpansionParams, t: float) -> float:
    return (p.d + 2 * p.v * t) * (p.d + 2 * p.v * t)


def area_part(p: ExpansionParams, t: float) -> float:
    """Combined area of the x-axis and y-axis partition nodes."""
    return 2 * p.d**2 + 4 * p.d * p.v * t


def vol_unpart(p: ExpansionParams) -> float:
    d, v, th = p.d, p.v, p.t_h
    return d * d * th + 2 * d * v * th**2 + (4.0 / 3.0) * v * v * th**3


def vol_part(p: ExpansionParams) -> float:
    d, v, th = p.d, p.v, p.t_h
    return 2 * d * d * th + 2 * d * v * th**2


def delta_v(p: ExpansionParams) -> float:
    """Partitioned minus unpartitioned search volume."""
    return p.d**2 * p.t_h - (4.0 / 3.0) * p.v**2 * p.t_h**3


def delta_v_rate(p: ExpansionParams) -> float:
    return p.d**2 - 4 * p.v**2 * p.t_h**2


def crossover_time(d: float, v: float) -> float:
    """Horizon past which the unpartitioned volume is the larger one."""
    return d * math.sqrt(3.0) / (2.0 * v)


# -- outlier split objective ------------------------------------------------------


def ta_area(t: float, n_d: float, params: TauCostParams, v_yd: float) -> float:
    """Total transformed-leaf area of a DVA partition with ``n_d`` objects and
    its outlier partition at time ``t``."""
    d, vx, vy, n, nl = params.d, params.v_xmax, params.v_ymax, params.n, params.n_l
    return n_d / nl * (d + 2 * vx * t) * (d + 2 * v_yd * t) + (n - n_d) / nl * (d + 2 * vx * t) * (d + 2 * vy * t)


def ta_rate(t: float, n_d: float, params: TauCostParams, v_yd: float) -> float:
    """Time derivative of ``ta_area``."""
    d, vx, vy, n, nl = params.d, params.v_xmax, params.v_ymax, params.n, params.n_l
    return 2 * n_d / nl * ((v_yd - vy) * (d + 4 * vx * t)) + 2 * n / nl * (d * vy + vx * (d + 4 * vy * t))


def tau_objective(n_d, v_yd, v_ymax):
    """``n_d * (v_yd - v_ymax)``: the only split-dependent part of ``ta_rate``."""
    return n_d * (v_yd - v_ymax)
