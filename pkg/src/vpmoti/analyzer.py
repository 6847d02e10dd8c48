"""Velocity analyzer: dominant velocity axes and their outlier thresholds.

Velocity samples are ``(n, 2)`` float arrays of velocity points (m/ts).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from vpmoti.core import Vec2
from vpmoti.costmodel import TauCostParams, tau_objective


class DegenerateSampleError(ValueError):
    pass


@dataclass(frozen=True)
class DvaPartition:
    points: np.ndarray
    mean: Vec2
    pc1: Vec2
    pc2: Vec2
    lambda1: float
    lambda2: float


@dataclass
class PerpSpeedHistogram:
    """Equal-width histogram of perpendicular speeds over ``[0, upper]``."""

    upper: float
    counts: np.ndarray

    @classmethod
    def build(cls, speeds, buckets: int = 100, upper: float | None = None) -> "PerpSpeedHistogram":
        speeds = np.sort(np.asarray(speeds, dtype=float).ravel())
        if upper is None:
            upper = float(speeds[-1]) if speeds.size else 0.0
        edges = upper * np.arange(1, buckets + 1) / buckets
        cum = np.searchsorted(speeds, edges, side="right")
        # speeds above a fixed upper bound are charged to the last bucket
        cum[-1] = speeds.size
        counts = np.diff(cum, prepend=0).astype(np.int64)
        return cls(upper, counts)

    @property
    def buckets(self) -> int:
        return len(self.counts)

    @property
    def width(self) -> float:
        return self.upper / len(self.counts)

    def edges(self) -> np.ndarray:
        """Upper edge of each bucket; bucket j holds speeds in ``(e[j-1], e[j]]``."""
        return self.upper * np.arange(1, len(self.counts) + 1) / len(self.counts)

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def bucket_of(self, speed: float) -> int:
        if self.upper <= 0:
            return 0
        j = math.ceil(speed / self.upper * len(self.counts)) - 1
        return min(max(j, 0), len(self.counts) - 1)

    def max_speed(self) -> float:
        """Upper edge of the highest non-empty bucket."""
        nz = np.flatnonzero(self.counts)
        if nz.size == 0:
            return 0.0
        return float(self.edges()[nz[-1]])


@dataclass
class DvaDescriptor:
    u: Vec2
    mean: Vec2
    tau: float
    perp_hist: PerpSpeedHistogram = field(repr=False)

    @property
    def angle_deg(self) -> float:
        return math.degrees(math.atan2(self.u[1], self.u[0]))


# -- PCA ----------------------------------------------------------------------


def _normalize_sign(x: float, y: float) -> tuple[float, float]:
    if x < 0 or (x == 0 and y < 0):
        return -x, -y
    return x, y


def _pca_arrays(pts: np.ndarray):
    mean = pts.mean(axis=0)
    c = pts - mean
    n = len(pts)
    a = float(c[:, 0] @ c[:, 0]) / n
    b = float(c[:, 0] @ c[:, 1]) / n
    d = float(c[:, 1] @ c[:, 1]) / n
    half = 0.5 * (a - d)
    r = math.hypot(half, b)
    mid = 0.5 * (a + d)
    theta = 0.5 * math.atan2(2.0 * b, a - d)
    ux, uy = _normalize_sign(math.cos(theta), math.sin(theta))
    return mean, (ux, uy), mid + r, max(mid - r, 0.0)


def pca2(points) -> tuple[Vec2, Vec2, float, float, Vec2]:
    """Closed-form PCA of 2-D points: ``(pc1, pc2, lambda1, lambda2, mean)``.

    Eigenvalues are of the population covariance; ``pc1`` has its first
    non-zero component positive and ``pc2`` is ``pc1`` turned +90 degrees.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        raise DegenerateSampleError("PCA needs at least two points")
    if np.all(pts == pts[0]):
        raise DegenerateSampleError("all sample points are identical")
    mean, (ux, uy), l1, l2 = _pca_arrays(pts)
    return Vec2(ux, uy), Vec2(-uy, ux), l1, l2, Vec2(mean[0], mean[1])


def perp_distances(pts: np.ndarray, mean, u) -> np.ndarray:
    return np.abs(-(pts[:, 0] - mean[0]) * u[1] + (pts[:, 1] - mean[1]) * u[0])


def _partition(pts: np.ndarray) -> DvaPartition:
    pc1, pc2, l1, l2, mean = pca2(pts)
    return DvaPartition(pts, mean, pc1, pc2, l1, l2)


# -- FindDVAs -----------------------------------------------------------------


def _line_of(pts: np.ndarray, anchor: np.ndarray, origin: bool):
    """Mean and unit direction of the 1st PC for one partition.

    A partition too small or degenerate for PCA falls back to the line from
    ``anchor`` (the sample mean) through its points.
    """
    if len(pts) >= 2 and not np.all(pts == pts[0]):
        mean, u, _, _ = _pca_arrays(pts)
        if origin:
            mean = np.zeros(2)
        return mean, u
    p = pts[0] if len(pts) else anchor
    mean = np.zeros(2) if origin else p
    d = p - anchor
    n = math.hypot(d[0], d[1])
    u = (d[0] / n, d[1] / n) if n > 0 else (1.0, 0.0)
    return mean, _normalize_sign(*u)


def _distance_matrix(pts: np.ndarray, lines) -> np.ndarray:
    return np.stack([perp_distances(pts, m, u) for m, u in lines], axis=1)


def _find_dvas_once(pts, k, rng, max_iters, through_origin, history):
    anchor = pts.mean(axis=0)
    assign = rng.integers(0, k, size=len(pts))
    rows = np.arange(len(pts))
    dist = None
    for _ in range(max_iters):
        for j in range(k):
            if not np.any(assign == j):
                lines = [_line_of(pts[assign == i], anchor, through_origin) for i in range(k)]
                own = _distance_matrix(pts, lines)[rows, assign]
                assign[int(np.argmax(own))] = j
        lines = [_line_of(pts[assign == j], anchor, through_origin) for j in range(k)]
        dist = _distance_matrix(pts, lines)
        best = dist.argmin(axis=1)
        moved = dist[rows, best] < dist[rows, assign]
        assign = np.where(moved, best, assign)
        history.append(float((dist[rows, assign] ** 2).sum()))
        if not moved.any():
            break
    return assign, history[-1]


def find_dvas(
    sample,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    through_origin: bool = False,
    restarts: int = 8,
    history: list | None = None,
) -> list[DvaPartition]:
    """k-means over velocity points with distance to each cluster's 1st PC.

    Each run starts from a seeded random assignment and alternates PCA per
    partition with reassignment to the nearest PC line until no point moves
    (a point stays put on ties). Empty partitions are reseeded with the point
    farthest from its current line. Of ``restarts`` runs, the one with the
    smallest summed squared perpendicular residual wins; when ``history`` is a
    list, the winner's residual after each reassignment is appended to it.
    """
    pts = np.asarray(sample, dtype=float).reshape(-1, 2)
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(pts) < 2 * k:
        raise DegenerateSampleError(f"need at least {2 * k} points for k={k}")
    if np.all(pts == pts[0]):
        raise DegenerateSampleError("all sample points are identical")
    rng = np.random.default_rng(seed)
    best_assign, best_cost, best_trace = None, math.inf, []
    for _ in range(max(1, restarts) if k > 1 else 1):
        trace: list[float] = []
        assign, cost = _find_dvas_once(pts, k, rng, max_iters, through_origin, trace)
        if cost < best_cost:
            best_assign, best_cost, best_trace = assign, cost, trace
    if history is not None:
        history.extend(best_trace)
    anchor = pts.mean(axis=0)
    parts = []
    for j in range(k):
        member = pts[best_assign == j]
        if len(member) >= 2 and not np.all(member == member[0]):
            part = _partition(member)
            if through_origin:
                part = DvaPartition(member, Vec2(0.0, 0.0), part.pc1, part.pc2, part.lambda1, part.lambda2)
            parts.append(part)
        else:
            mean, u = _line_of(member, anchor, through_origin)
            parts.append(DvaPartition(member, Vec2(*mean), Vec2(*u), Vec2(-u[1], u[0]), 0.0, 0.0))
    return parts


# -- outlier threshold ----------------------------------------------------------


def tau_from_histogram(hist: PerpSpeedHistogram, v_ymax: float | None = None) -> tuple[float, int]:
    """Scan bucket upper edges as candidate thresholds; returns ``(tau, n_d)``.

    Ties go to the larger threshold (more objects kept on the axis). An empty
    histogram admits everything.
    """
    if hist.total == 0:
        return math.inf, 0
    edges = hist.edges()
    cum = hist.cumulative()
    if v_ymax is None:
        v_ymax = hist.upper
    obj = tau_objective(cum, edges, v_ymax)
    best = obj.min()
    j = int(np.flatnonzero(obj <= best)[-1])
    return float(edges[j]), int(cum[j])


def _snap(speeds: np.ndarray, scale: float) -> np.ndarray:
    # round-off from the PCA fit should not count as perpendicular motion
    return np.where(speeds <= 1e-9 * max(scale, 1.0), 0.0, speeds)


def compute_tau(
    partition: DvaPartition | np.ndarray,
    params: TauCostParams | None = None,
    buckets: int = 100,
) -> tuple[float, int]:
    """Outlier threshold for one partition: ``(tau, n_d)``.

    Accepts a partition (perpendicular speeds are measured to its 1st PC
    line) or an array of perpendicular speeds. ``params`` is accepted for
    interface symmetry with ``ta_rate``; the minimizer does not depend on it.
    """
    if isinstance(partition, DvaPartition):
        speeds = perp_distances(partition.points, partition.mean, partition.pc1)
        speeds = _snap(speeds, float(np.abs(partition.points).max(initial=0.0)))
    else:
        speeds = np.asarray(partition, dtype=float)
    if speeds.size == 0:
        return math.inf, 0
    hist = PerpSpeedHistogram.build(speeds, buckets)
    return tau_from_histogram(hist, float(speeds.max()))


def velocity_partitioning(
    sample,
    k: int = 2,
    params: TauCostParams | None = None,
    seed: int = 0,
    buckets: int = 100,
    max_iters: int = 100,
    through_origin: bool = False,
    restarts: int = 8,
) -> tuple[list[DvaDescriptor], np.ndarray]:
    """DVAs with outlier thresholds, plus the velocity points set aside as outliers."""
    pts = np.asarray(sample, dtype=float).reshape(-1, 2)
    parts = find_dvas(pts, k, seed=seed, max_iters=max_iters, through_origin=through_origin, restarts=restarts)
    descriptors = []
    outliers = []
    for p in parts:
        speeds = _snap(perp_distances(p.points, p.mean, p.pc1), float(np.abs(pts).max(initial=0.0)))
        hist = PerpSpeedHistogram.build(speeds, buckets)
        tau, _ = tau_from_histogram(hist, float(speeds.max()) if speeds.size else 0.0)
        keep = speeds <= tau
        outliers.append(p.points[~keep])
        survivors = p.points[keep]
        mean, u = p.mean, p.pc1
        if len(survivors) >= 2 and not np.all(survivors == survivors[0]):
            m, uu, _, _ = _pca_arrays(survivors)
            mean = Vec2(0.0, 0.0) if through_origin else Vec2(m[0], m[1])
            u = Vec2(*uu)
        descriptors.append(DvaDescriptor(u, mean, tau, hist))
    out = np.concatenate(outliers) if outliers else np.empty((0, 2))
    return descriptors, out


def export_partitions_csv(parts: Sequence[DvaPartition], path, outliers=None) -> None:
    """Scatter data: ``vx, vy, partition_id``; outliers get partition id -1."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vx", "vy", "partition_id"])
        for j, p in enumerate(parts):
            for vx, vy in p.points:
                w.writerow([f"{vx:.6f}", f"{vy:.6f}", j])
        if outliers is not None:
            for vx, vy in outliers:
                w.writerow([f"{vx:.6f}", f"{vy:.6f}", -1])
