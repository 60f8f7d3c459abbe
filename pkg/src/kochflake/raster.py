"""Scanline rasterization helpers.

Cell centers sit at origin + (index + 1/2) * h.  Interior tests use the
even-odd rule on cell centers: a center is inside iff a horizontal ray to the
left crosses the boundary an odd number of times.  Crossings use the half-open
convention [ymin, ymax) per edge so shared vertices are counted once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, ResourceCapError
from .geometry import Polyline

DEFAULT_CELL_CAP = 400_000_000


@dataclass(frozen=True)
class Grid:
    ox: float
    oy: float
    h: float
    nx: int
    ny: int

    def centers_x(self, cols: np.ndarray) -> np.ndarray:
        return self.ox + (cols + 0.5) * self.h

    def centers_y(self, rows: np.ndarray) -> np.ndarray:
        return self.oy + (rows + 0.5) * self.h


def grid_for(poly: Polyline, h: float, pad: float = 0.0, cell_cap: int = DEFAULT_CELL_CAP) -> Grid:
    if h <= 0:
        raise InvalidParameterError("grid pitch must be positive")
    lo, hi = poly.bbox()
    pad = pad + 2.0 * h
    ox, oy = lo - pad
    nx = int(np.ceil((hi[0] + pad - ox) / h)) + 1
    ny = int(np.ceil((hi[1] + pad - oy) / h)) + 1
    if nx * ny > cell_cap:
        raise ResourceCapError(f"grid would need {nx * ny} > {cell_cap} cells")
    return Grid(float(ox), float(oy), float(h), nx, ny)


def _crossings(poly: Polyline, grid: Grid):
    """All (row, x) points where polygon edges cross cell-center scanlines."""
    a, b = poly.segment_endpoints()
    x1, y1 = a.T
    x2, y2 = b.T
    keep = y1 != y2
    x1, y1, x2, y2 = x1[keep], y1[keep], x2[keep], y2[keep]
    ymin = np.minimum(y1, y2)
    ymax = np.maximum(y1, y2)
    # rows j with oy + (j+1/2) h in [ymin, ymax)
    j_lo = np.ceil((ymin - grid.oy) / grid.h - 0.5).astype(np.int64)
    j_hi = np.ceil((ymax - grid.oy) / grid.h - 0.5).astype(np.int64) - 1
    cnt = np.maximum(j_hi - j_lo + 1, 0)
    total = int(cnt.sum())
    if total == 0:
        return np.empty(0, np.int64), np.empty(0, np.float64)
    eidx = np.repeat(np.arange(len(cnt)), cnt)
    offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    rows = j_lo[eidx] + offs
    yc = grid.oy + (rows + 0.5) * grid.h
    t = (yc - y1[eidx]) / (y2[eidx] - y1[eidx])
    xc = x1[eidx] + t * (x2[eidx] - x1[eidx])
    return rows, xc


class CrossingIndex:
    """Sorted scanline crossings of a closed polygon, for point parity tests."""

    def __init__(self, poly: Polyline, grid: Grid):
        if not poly.closed:
            raise InvalidParameterError("interior tests need a closed polyline")
        rows, xc = _crossings(poly, grid)
        self.grid = grid
        self._span = (grid.nx + 4) * grid.h
        keys = rows.astype(np.float64) * self._span + (xc - grid.ox)
        order = np.argsort(keys, kind="stable")
        self._keys = keys[order]

    def inside(self, rows: np.ndarray, xs: np.ndarray) -> np.ndarray:
        """Even-odd interior flag for points at scanline height of ``rows``.

        Closed polygons cross every scanline an even number of times, so the
        global count of crossings with smaller key has the same parity as the
        count within the point's own row.
        """
        pk = rows.astype(np.float64) * self._span + (xs - self.grid.ox)
        cnt = np.searchsorted(self._keys, pk)
        return (cnt & 1).astype(bool)


def interior_mask(poly: Polyline, grid: Grid) -> np.ndarray:
    """Full-grid (ny, nx) boolean mask of cells whose center is inside."""
    rows, xc = _crossings(poly, grid)
    # first cell column whose center lies right of the crossing
    cols = np.ceil((xc - grid.ox) / grid.h - 0.5).astype(np.int64)
    np.clip(cols, 0, grid.nx, out=cols)
    keep = (rows >= 0) & (rows < grid.ny)
    flips = np.zeros((grid.ny, grid.nx + 1), dtype=np.uint8)
    np.add.at(flips, (rows[keep], cols[keep]), 1)
    parity = np.cumsum(flips[:, :-1], axis=1, dtype=np.uint8)
    return (parity & 1).astype(bool)


def boundary_cells(mask: np.ndarray) -> np.ndarray:
    """Exterior cells 4-adjacent to an interior cell."""
    near = np.zeros_like(mask)
    near[:-1, :] |= mask[1:, :]
    near[1:, :] |= mask[:-1, :]
    near[:, :-1] |= mask[:, 1:]
    near[:, 1:] |= mask[:, :-1]
    return near & ~mask


def cells_near_segments(
    poly: Polyline,
    eps: float,
    grid: Grid,
    chunk_cells: int = 4_000_000,
) -> np.ndarray:
    """Sorted unique cell keys (row*nx+col) with exact distance <= eps.

    Distance is the exact Euclidean point-to-segment distance, evaluated only
    on the cells inside each segment's eps-inflated bounding box.
    """
    a, b = poly.segment_endpoints()
    h, ox, oy, nx = grid.h, grid.ox, grid.oy, grid.nx
    lox = np.minimum(a[:, 0], b[:, 0]) - eps
    hix = np.maximum(a[:, 0], b[:, 0]) + eps
    loy = np.minimum(a[:, 1], b[:, 1]) - eps
    hiy = np.maximum(a[:, 1], b[:, 1]) + eps
    i_lo = np.ceil((lox - ox) / h - 0.5).astype(np.int64)
    i_hi = np.floor((hix - ox) / h - 0.5).astype(np.int64)
    j_lo = np.ceil((loy - oy) / h - 0.5).astype(np.int64)
    j_hi = np.floor((hiy - oy) / h - 0.5).astype(np.int64)
    wi = i_hi - i_lo + 1
    wj = j_hi - j_lo + 1

    ab = b - a
    ab2 = np.maximum((ab * ab).sum(axis=1), 1e-300)

    out = []
    pending = 0
    nseg = len(a)
    # batch segments of similar window size together: every window in a batch
    # is padded to the batch maximum, so a few long segments must not set the
    # pad for the many short ones
    order = np.argsort(wi * wj, kind="stable")
    wi_s = wi[order]
    wj_s = wj[order]
    pos = 0
    while pos < nseg:
        # grow the batch while the padded cost (count x batch-max window)
        # stays within the chunk budget
        WI, WJ = int(wi_s[pos]), int(wj_s[pos])
        end = pos + 1
        while end < nseg:
            nwi = max(WI, int(wi_s[end]))
            nwj = max(WJ, int(wj_s[end]))
            if (end - pos + 1) * nwi * nwj > chunk_cells:
                break
            WI, WJ = nwi, nwj
            end += 1
        sel = order[pos:end]
        pos = end
        asel, absel = a[sel], ab[sel]
        ax = asel[:, 0, None, None]
        ay = asel[:, 1, None, None]
        ex = absel[:, 0, None, None]
        ey = absel[:, 1, None, None]
        e2 = ab2[sel, None, None]
        ii = np.arange(WI)
        cols = i_lo[sel, None] + ii[None, :]                     # (S, WI)
        cx = ox + (cols + 0.5) * h
        j_block = WJ if len(sel) > 1 else max(1, chunk_cells // max(WI, 1))
        for j0 in range(0, WJ, j_block):
            jj = np.arange(j0, min(j0 + j_block, WJ))
            rows = j_lo[sel, None] + jj[None, :]                 # (S, JB)
            cy = oy + (rows + 0.5) * h
            shape = (len(sel), len(jj), WI)
            px = np.broadcast_to(cx[:, None, :], shape)
            py = np.broadcast_to(cy[:, :, None], shape)
            dx = px - ax
            dy = py - ay
            t = (dx * ex + dy * ey) / e2
            np.clip(t, 0.0, 1.0, out=t)
            qx = dx - t * ex
            qy = dy - t * ey
            # cells tested beyond a segment's own (smaller) window cannot pass
            # the exact distance test, so no masking is needed
            hit = qx * qx + qy * qy <= eps * eps
            kk = rows[:, :, None] * nx + cols[:, None, :]
            out.append(np.unique(kk[hit]))
            pending += len(out[-1])
            # windows of nearby segments overlap heavily at eps >> segment
            # length; merge early so duplicates do not pile up
            if pending > 20_000_000:
                out = [np.unique(np.concatenate(out))]
                pending = len(out[0])
    if not out:
        return np.empty(0, np.int64)
    return np.unique(np.concatenate(out))
