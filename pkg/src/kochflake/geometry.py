"""Planar polyline / polygon primitives shared by all constructions."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import shapely

from .errors import InvalidParameterError

SCHEMA_VERSION = 1


@dataclass
class Polyline:
    """An ordered chain of planar vertices.

    For closed curves the first vertex is stored once; closure is implicit.
    """

    vertices: np.ndarray
    closed: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 2:
            raise InvalidParameterError("vertices must be an (n>=2, 2) array")
        self.vertices = v

    # -- basic measures -------------------------------------------------

    @property
    def n_segments(self) -> int:
        return len(self.vertices) - 1 + (1 if self.closed else 0)

    def segment_endpoints(self):
        """Return (starts, ends) arrays of shape (n_segments, 2)."""
        v = self.vertices
        if self.closed:
            starts = v
            ends = np.roll(v, -1, axis=0)
        else:
            starts, ends = v[:-1], v[1:]
        return starts, ends

    def segment_lengths(self) -> np.ndarray:
        a, b = self.segment_endpoints()
        return np.hypot(*(b - a).T)

    def perimeter(self) -> float:
        return float(self.segment_lengths().sum())

    def area(self) -> float:
        """Unsigned enclosed area (shoelace); requires a closed chain."""
        if not self.closed:
            raise InvalidParameterError("area needs a closed polyline")
        x, y = self.vertices.T
        return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)

    def bbox(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return lo, hi

    def diameter(self) -> float:
        lo, hi = self.bbox()
        return float(np.hypot(*(hi - lo)))

    # -- shapely bridges -------------------------------------------------

    def shapely_polygon(self) -> shapely.Polygon:
        if not self.closed:
            raise InvalidParameterError("need a closed polyline")
        return shapely.Polygon(self.vertices)

    def shapely_boundary(self) -> shapely.LineString:
        v = self.vertices
        if self.closed:
            v = np.vstack([v, v[:1]])
        return shapely.LineString(v)

    # -- identity / serialization ----------------------------------------

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(b"closed" if self.closed else b"open")
        h.update(np.ascontiguousarray(self.vertices).tobytes())
        return h.hexdigest()[:16]

    def to_json_dict(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "seq": self.meta.get("seq"),
            "level": self.meta.get("level"),
            "vertices": self.vertices.tolist(),
            "closed": self.closed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "Polyline":
        p = cls(np.asarray(d["vertices"], dtype=np.float64), bool(d["closed"]))
        p.meta = {k: d.get(k) for k in ("seq", "level") if d.get(k) is not None}
        return p

    def to_svg(self, stroke: str = "black", stroke_width: float = 0.002) -> str:
        """SVG 1.1 document with the curve as a single path in a unit viewBox."""
        lo, hi = self.bbox()
        span = max(float((hi - lo).max()), 1e-12)
        pts = (self.vertices - lo) / span
        pts[:, 1] = 1.0 - pts[:, 1]  # SVG y grows downward
        cmds = ["M %.8f %.8f" % tuple(pts[0])]
        cmds += ["L %.8f %.8f" % tuple(p) for p in pts[1:]]
        if self.closed:
            cmds.append("Z")
        return (
            '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            'viewBox="0 0 1 1">\n'
            f'<path d="{" ".join(cmds)}" fill="none" stroke="{stroke}" '
            f'stroke-width="{stroke_width}"/>\n</svg>\n'
        )


def scaled(p: Polyline, r: float) -> Polyline:
    """Copy of ``p`` with every vertex multiplied by r about the origin."""
    if r <= 0:
        raise InvalidParameterError("scale factor must be positive")
    out = Polyline(p.vertices * float(r), p.closed)
    out.meta = dict(p.meta)
    return out


def unit_square() -> Polyline:
    return Polyline(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), closed=True)


def unit_triangle() -> Polyline:
    """Equilateral triangle with unit side."""
    return Polyline(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]]), closed=True)


def regular_polygon(k: int, radius: float = 1.0) -> Polyline:
    if k < 3:
        raise InvalidParameterError("need at least 3 vertices")
    ang = 2.0 * np.pi * np.arange(k) / k
    return Polyline(radius * np.column_stack([np.cos(ang), np.sin(ang)]), closed=True)


def simplicity_check(p: Polyline) -> bool:
    """True iff no two non-adjacent segments of the chain intersect.

    Degenerate input (repeated consecutive vertices, <3 vertices for a closed
    chain) returns False rather than raising.
    """
    try:
        v = p.vertices
        if np.any(np.all(v[1:] == v[:-1], axis=1)):
            return False
        if p.closed:
            if len(v) < 3:
                return False
            return bool(shapely.Polygon(v).is_valid)
        return bool(shapely.LineString(v).is_simple)
    except Exception:
        return False
