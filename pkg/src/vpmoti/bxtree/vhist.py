"""Grid histogram of per-cell velocity bounds and the query enlargement it drives."""

from __future__ import annotations

import math

import numpy as np

from vpmoti.core import RangeQuery, Rect, Vec2, query_bbox_at


class VelocityHistogram:
    """Min/max velocity per axis for each cell of a ``cells x cells`` grid.

    Bounds only grow; a histogram is discarded together with its time bucket.
    Positions outside the extent are charged to the nearest border cell.
    """

    def __init__(self, extent: Rect, cells: int = 64):
        self.extent = extent
        self.cells = cells
        self.cw = extent.width / cells
        self.ch = extent.height / cells
        self.vmin = np.full((cells, cells, 2), np.inf)
        self.vmax = np.full((cells, cells, 2), -np.inf)
        # cell boundaries, border cells open towards infinity
        xs = extent.lo[0] + self.cw * np.arange(cells + 1)
        ys = extent.lo[1] + self.ch * np.arange(cells + 1)
        xs[0], xs[-1] = -np.inf, np.inf
        ys[0], ys[-1] = -np.inf, np.inf
        self._x0, self._x1 = xs[:-1][:, None], xs[1:][:, None]
        self._y0, self._y1 = ys[:-1][None, :], ys[1:][None, :]

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        last = self.cells - 1
        i = int(math.floor((x - self.extent.lo[0]) / self.cw))
        j = int(math.floor((y - self.extent.lo[1]) / self.ch))
        return min(max(i, 0), last), min(max(j, 0), last)

    def add(self, x: float, y: float, vx: float, vy: float) -> None:
        i, j = self.cell_of(x, y)
        lo = self.vmin[i, j]
        hi = self.vmax[i, j]
        if vx < lo[0]:
            lo[0] = vx
        if vy < lo[1]:
            lo[1] = vy
        if vx > hi[0]:
            hi[0] = vx
        if vy > hi[1]:
            hi[1] = vy

    def occupied(self) -> np.ndarray:
        return self.vmin[:, :, 0] <= self.vmax[:, :, 0]


def enlarge_query(q: RangeQuery, label_time: float, vhist: VelocityHistogram) -> Rect | None:
    """Window at ``label_time`` guaranteed to hold the indexed positions of
    every object that satisfies ``q``.

    For each occupied histogram cell, the query's bounding boxes at ``t1`` and
    ``t2`` are moved back to ``label_time`` with the cell's velocity bounds
    (the region reachable is bilinear in time and velocity, so the corner
    cases bound it) and clipped to the cell. The window is the bounding box of
    those pieces; ``None`` means no cell can contribute.
    """
    occ = vhist.occupied()
    if not occ.any():
        return None
    lo_x = np.full(occ.shape, np.inf)
    lo_y = np.full(occ.shape, np.inf)
    hi_x = np.full(occ.shape, -np.inf)
    hi_y = np.full(occ.shape, -np.inf)
    vmin, vmax = vhist.vmin, vhist.vmax
    times = (q.t1,) if q.t1 == q.t2 else (q.t1, q.t2)
    with np.errstate(invalid="ignore"):
        for t in times:
            box = query_bbox_at(q, t)
            gap = label_time - t
            # moving back in time flips which velocity extreme bounds each side
            vl, vh = (vmin, vmax) if gap >= 0 else (vmax, vmin)
            np.minimum(lo_x, box.lo[0] + gap * vl[:, :, 0], out=lo_x)
            np.minimum(lo_y, box.lo[1] + gap * vl[:, :, 1], out=lo_y)
            np.maximum(hi_x, box.hi[0] + gap * vh[:, :, 0], out=hi_x)
            np.maximum(hi_y, box.hi[1] + gap * vh[:, :, 1], out=hi_y)
    lo_x = np.maximum(lo_x, vhist._x0)
    hi_x = np.minimum(hi_x, vhist._x1)
    lo_y = np.maximum(lo_y, vhist._y0)
    hi_y = np.minimum(hi_y, vhist._y1)
    hit = occ & (lo_x <= hi_x) & (lo_y <= hi_y)
    if not hit.any():
        return None
    return Rect(
        Vec2(float(lo_x[hit].min()), float(lo_y[hit].min())),
        Vec2(float(hi_x[hit].max()), float(hi_y[hit].max())),
    )
