"""Self-affine carpets: dimension formulas, the continuous-curve variant and
the Jordan domain under its graph."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .geometry import Polyline


@dataclass(frozen=True)
class Pattern:
    """An m x n 0/1 pattern, m < n, rows indexed from the bottom."""

    cells: tuple  # tuple of m row-tuples, bottom row first

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in r) for r in self.cells)
        object.__setattr__(self, "cells", rows)
        m, widths = len(rows), {len(r) for r in rows}
        if m == 0 or len(widths) != 1:
            raise InvalidParameterError("pattern must be a nonempty rectangular matrix")
        n = widths.pop()
        if not m < n:
            raise InvalidParameterError("pattern needs fewer rows than columns (m < n)")
        if not any(any(r) for r in rows):
            raise InvalidParameterError("pattern must keep at least one cell")
        if any(v not in (0, 1) for r in rows for v in r):
            raise InvalidParameterError("pattern entries must be 0 or 1")

    @property
    def m(self) -> int:
        return len(self.cells)

    @property
    def n(self) -> int:
        return len(self.cells[0])

    def row_counts(self) -> list[int]:
        return [sum(r) for r in self.cells]

    def is_curve_compatible(self) -> bool:
        """Exactly one chosen cell per column (graph-of-function construction)."""
        return all(sum(self.cells[i][j] for i in range(self.m)) == 1 for j in range(self.n))

    def column_rows(self) -> list[int]:
        """For curve-compatible patterns: the chosen row per column."""
        if not self.is_curve_compatible():
            raise InvalidParameterError("pattern is not curve-compatible")
        return [next(i for i in range(self.m) if self.cells[i][j]) for j in range(self.n)]

    @classmethod
    def parse(cls, text: str) -> "Pattern":
        """Rows top-to-bottom, semicolon separated, e.g. "0111;1000"."""
        rows = [tuple(int(c) for c in part) for part in text.strip().split(";") if part]
        return cls(tuple(reversed(rows)))


PATTERN_A = Pattern(((1, 0, 0, 0), (0, 1, 1, 1)))


def carpet_dims(p: Pattern):
    """(Hausdorff, Minkowski) dimension of the carpet built from ``p``."""
    m, n = p.m, p.n
    r = p.row_counts()
    expo = math.log(m) / math.log(n)
    hausdorff = math.log(sum(rj**expo for rj in r if rj > 0)) / math.log(m)
    minkowski = 1.0 + math.log(sum(r) / m) / math.log(n)
    return hausdorff, minkowski


def _boundary_values(p: Pattern):
    """f(0) and f(1) of the limit curve, from the end-column fixed points."""
    rows = p.column_rows()
    f0 = rows[0] / (p.m - 1) if p.m > 1 else 0.0
    f1 = rows[-1] / (p.m - 1) if p.m > 1 else 0.0
    return f0, f1


def carpet_curve(p: Pattern, level: int) -> Polyline:
    """Level-``level`` polygonal approximation of the graph of the continuous
    self-affine function on [0,1].

    Each refinement step subdivides a cell into n columns.  A child uses the
    reflected pattern exactly when the plain choice would break continuity of
    the running height; this reproduces the plain/reflected assignment of the
    canonical 2 x 4 example.
    """
    if level < 0:
        raise InvalidParameterError("level must be >= 0")
    rows = p.column_rows()
    m, n = p.m, p.n
    f0, f1 = _boundary_values(p)

    # cells: (x0, y0, w, h, reflected)
    cells = [(0.0, 0.0, 1.0, 1.0, False)]
    for _ in range(level):
        new = []
        for (x0, y0, w, h, refl) in cells:
            entry = y0 + (f1 if refl else f0) * h
            cur = entry
            for j in range(n):
                jj = (n - 1 - j) if refl else j
                b = y0 + rows[jj] * h / m
                hc = h / m
                e_plain = b + f0 * hc
                e_refl = b + f1 * hc
                if abs(e_plain - cur) <= abs(e_refl - cur):
                    child_refl, exit_ = False, b + f1 * hc
                    if abs(e_plain - cur) > 1e-9 * h:
                        raise InvalidParameterError("pattern does not yield a continuous curve")
                else:
                    child_refl, exit_ = True, b + f0 * hc
                    if abs(e_refl - cur) > 1e-9 * h:
                        raise InvalidParameterError("pattern does not yield a continuous curve")
                new.append((x0 + j * w / n, b, w / n, hc, child_refl))
                cur = exit_
        cells = new

    pts = [(0.0, f0)]
    for (x0, y0, w, h, refl) in cells:
        exit_y = y0 + (f0 if refl else f1) * h
        pts.append((x0 + w, exit_y))
    out = Polyline(np.array(pts), closed=False)
    out.meta = {"level": level, "pattern": p.cells}
    return out


def carpet_domain(p: Pattern, level: int) -> Polyline:
    """Closed Jordan domain under the doubled graph.

    Top edge is g(t) = 1 + f(t) on [0,1] and 3 - f(2-t) on (1,2]; the region
    is closed by {0}x[0,1], [0,2]x{0} and {2}x[0,g(2)].
    """
    curve = carpet_curve(p, level)
    left = curve.vertices + np.array([0.0, 1.0])
    right = np.array([2.0, 3.0]) - curve.vertices[::-1]
    top = np.vstack([left, right[1:]])
    ring = np.vstack([
        [[0.0, 0.0], [2.0, 0.0]],
        top[::-1],  # from (2, g(2)) back to (0, 1)
    ])
    out = Polyline(ring, closed=True)
    out.meta = {"level": level, "pattern": p.cells}
    return out
