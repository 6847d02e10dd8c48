"""Space-filling curves over a 2^l x 2^l grid.

Only the Z-order (Morton) curve is provided. Bit convention: the x cell
coordinate supplies the least significant interleaved bit, so at l=2
``(1, 0) -> 1`` and ``(0, 1) -> 2``.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np


class SpaceFillingCurve(Protocol):
    levels: int

    def encode(self, cx: int, cy: int) -> int: ...

    def decode(self, z: int) -> tuple[int, int]: ...

    def runs(self, cx0: int, cx1: int, cy0: int, cy1: int, max_runs: int | None = None) -> list[tuple[int, int]]: ...


def _spread(v: np.ndarray) -> np.ndarray:
    # interleave zeros between the low 32 bits of v
    v = v.astype(np.uint64) & np.uint64(0xFFFFFFFF)
    v = (v | (v << np.uint64(16))) & np.uint64(0x0000FFFF0000FFFF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x00FF00FF00FF00FF)
    v = (v | (v << np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    v = (v | (v << np.uint64(2))) & np.uint64(0x3333333333333333)
    v = (v | (v << np.uint64(1))) & np.uint64(0x5555555555555555)
    return v


def _squash(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.uint64) & np.uint64(0x5555555555555555)
    v = (v | (v >> np.uint64(1))) & np.uint64(0x3333333333333333)
    v = (v | (v >> np.uint64(2))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    v = (v | (v >> np.uint64(4))) & np.uint64(0x00FF00FF00FF00FF)
    v = (v | (v >> np.uint64(8))) & np.uint64(0x0000FFFF0000FFFF)
    v = (v | (v >> np.uint64(16))) & np.uint64(0x00000000FFFFFFFF)
    return v


def _spread_byte(v: int) -> int:
    z = 0
    for b in range(8):
        z |= ((v >> b) & 1) << (2 * b)
    return z


_SPREAD8 = [_spread_byte(v) for v in range(256)]


class ZCurve:
    def __init__(self, levels: int = 10):
        if not 1 <= levels <= 16:
            raise ValueError(f"levels must be in [1, 16], got {levels}")
        self.levels = levels
        self.side = 1 << levels

    def _check(self, cx: int, cy: int) -> None:
        if not (0 <= cx < self.side and 0 <= cy < self.side):
            raise ValueError(f"cell ({cx}, {cy}) outside {self.side}x{self.side} grid")

    def encode(self, cx: int, cy: int) -> int:
        self._check(cx, cy)
        z = 0
        shift = 0
        while cx or cy:
            z |= (_SPREAD8[cx & 0xFF] | (_SPREAD8[cy & 0xFF] << 1)) << shift
            cx >>= 8
            cy >>= 8
            shift += 16
        return z

    def decode(self, z: int) -> tuple[int, int]:
        if not 0 <= z < self.side * self.side:
            raise ValueError(f"curve value {z} out of range")
        cx = cy = 0
        for b in range(self.levels):
            cx |= ((z >> (2 * b)) & 1) << b
            cy |= ((z >> (2 * b + 1)) & 1) << b
        return cx, cy

    def encode_many(self, cx: np.ndarray, cy: np.ndarray) -> np.ndarray:
        return _spread(cx) | (_spread(cy) << np.uint64(1))

    def decode_many(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=np.uint64)
        return _squash(z), _squash(z >> np.uint64(1))

    def runs(self, cx0: int, cx1: int, cy0: int, cy1: int, max_runs: int | None = None) -> list[tuple[int, int]]:
        """Maximal runs ``[zlo, zhi]`` of curve values covering a cell window.

        With ``max_runs`` set, the runs separated by the smallest gaps are
        merged until at most ``max_runs`` remain.
        """
        last = self.side - 1
        cx0, cx1 = max(cx0, 0), min(cx1, last)
        cy0, cy1 = max(cy0, 0), min(cy1, last)
        if cx0 > cx1 or cy0 > cy1:
            return []
        xs = np.arange(cx0, cx1 + 1, dtype=np.uint64)
        ys = np.arange(cy0, cy1 + 1, dtype=np.uint64)
        z = (_spread(xs)[None, :] | (_spread(ys)[:, None] << np.uint64(1))).ravel()
        z = np.sort(z).astype(np.int64)
        breaks = np.flatnonzero(np.diff(z) != 1)
        starts = np.concatenate(([z[0]], z[breaks + 1]))
        ends = np.concatenate((z[breaks], [z[-1]]))
        if max_runs is not None and len(starts) > max_runs:
            gaps = starts[1:] - ends[:-1]
            keep = np.sort(np.argpartition(-gaps, max_runs - 2)[: max_runs - 1]) if max_runs > 1 else np.array([], dtype=np.int64)
            starts = np.concatenate(([starts[0]], starts[keep + 1]))
            ends = np.concatenate((ends[keep], [ends[-1]]))
        return list(zip(starts.tolist(), ends.tolist()))
