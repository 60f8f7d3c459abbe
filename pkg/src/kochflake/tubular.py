"""Inner tubular-neighbourhood volumes mu(eps) of polygonal domains."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import raster
from .errors import InvalidDomainError, InvalidParameterError
from .generator import ScaleSequence, counts, snowflake
from .geometry import Polyline, simplicity_check

_SQRT3 = math.sqrt(3.0)


@dataclass
class TubeEntry:
    eps: float
    mu: float
    mu_err: float
    level: int = -1
    grid_h: float = 0.0


@dataclass
class TubularProfile:
    """Sampled pairs (eps, mu(eps)) with grid-error metadata."""

    entries: list[TubeEntry] = field(default_factory=list)
    domain_id: str = ""

    def eps(self) -> np.ndarray:
        return np.array([e.eps for e in self.entries])

    def mu(self) -> np.ndarray:
        return np.array([e.mu for e in self.entries])

    def mu_err(self) -> np.ndarray:
        return np.array([e.mu_err for e in self.entries])

    def sorted(self) -> "TubularProfile":
        ents = sorted(self.entries, key=lambda e: e.eps)
        return TubularProfile(ents, self.domain_id)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("eps,mu,muErr,level,gridH\n")
        for e in self.entries:
            buf.write(f"{e.eps!r},{e.mu!r},{e.mu_err!r},{e.level},{e.grid_h!r}\n")
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "domainId": self.domain_id,
                "entries": [
                    {"eps": e.eps, "mu": e.mu, "muErr": e.mu_err, "level": e.level, "gridH": e.grid_h}
                    for e in self.entries
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "TubularProfile":
        d = json.loads(text)
        ents = [
            TubeEntry(e["eps"], e["mu"], e["muErr"], e.get("level", -1), e.get("gridH", 0.0))
            for e in d["entries"]
        ]
        return cls(ents, d.get("domainId", ""))


def tube_volume(polygon: Polyline, eps: float, grid_h: float, check_simple: bool = True,
                cell_cap: int = raster.DEFAULT_CELL_CAP):
    """Area of the inner eps-tube, by cell-center rasterization.

    A cell counts iff its center is inside the polygon (even-odd rule) and its
    exact Euclidean distance to the boundary is <= eps.  The error estimate is
    (number of cells on the rim of the measured region) * grid_h^2.
    """
    if not polygon.closed:
        raise InvalidDomainError("tube_volume needs a closed polygon")
    if eps <= 0:
        raise InvalidParameterError("eps must be positive")
    if not (0 < grid_h <= eps / 4.0):
        raise InvalidParameterError("need 0 < gridH <= eps/4")
    if check_simple and not simplicity_check(polygon):
        raise InvalidDomainError("polygon is not simple")

    grid = raster.grid_for(polygon, grid_h, pad=eps, cell_cap=cell_cap)
    keys = raster.cells_near_segments(polygon, eps, grid)
    rows = keys // grid.nx
    cols = keys % grid.nx
    idx = raster.CrossingIndex(polygon, grid)
    inside = idx.inside(rows, grid.centers_x(cols))
    region = keys[inside]  # sorted, unique
    mu = float(len(region)) * grid_h * grid_h

    # rim cells: region cells with a 4-neighbour outside the region
    rim = np.zeros(len(region), dtype=bool)
    for off in (1, -1, grid.nx, -grid.nx):
        nb = region + off
        pos = np.searchsorted(region, nb)
        ok = (pos < len(region)) & (region[np.minimum(pos, len(region) - 1)] == nb)
        rim |= ~ok
    mu_err = float(rim.sum()) * grid_h * grid_h
    return mu, mu_err


def spike_bounds(seq: ScaleSequence, n: int):
    """Analytic sandwich for mu(eps_n) from the level-n spike volume.

    Lower: three times the area of the level-n spikes of one curve copy.
    Upper: three times the area of the eps_n neighbourhood of one curve copy,
    over-counted as 4 squares per segment.
    """
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    c_prev = counts(seq, n - 1)
    c = counts(seq, n)
    xi_n = seq.term(n)
    eps2 = 1.0 / (c.L * c.L)
    lower = 3.0 * (_SQRT3 / 4.0) * c_prev.M * xi_n * eps2
    upper = 12.0 * c.M * eps2
    return lower, upper


def level_for_eps(seq: ScaleSequence, eps: float, max_level: int = 64) -> int:
    """Smallest n with eps_n <= eps/4: features finer than that are below the
    grid-error band at distance scale eps."""
    L = 1
    for n in range(max_level + 1):
        if 1.0 / L <= eps / 4.0:
            return n
        L *= 2 * seq.term(n + 1) + 1
    raise InvalidParameterError("eps too small for the configured max level")


def tube_profile(seq: ScaleSequence, eps_list, segment_cap: int | None = None) -> TubularProfile:
    """mu(eps) for a snowflake built from ``seq``, one construction level per eps."""
    eps_arr = np.asarray(sorted(float(e) for e in eps_list))
    if len(eps_arr) == 0 or eps_arr[0] <= 0:
        raise InvalidParameterError("eps values must be positive")
    prof = TubularProfile()
    cache: dict[int, Polyline] = {}
    for eps in eps_arr[::-1]:
        n = level_for_eps(seq, eps)
        if n not in cache:
            kw = {"segment_cap": segment_cap} if segment_cap else {}
            cache[n] = snowflake(seq, n, **kw)
        poly = cache[n]
        h = eps / 8.0
        mu, err = tube_volume(poly, eps, h, check_simple=False)
        prof.entries.append(TubeEntry(float(eps), mu, err, n, h))
        if not prof.domain_id:
            prof.domain_id = poly.content_hash()
    prof.entries.reverse()
    return prof


def polygon_tube_profile(polygon: Polyline, eps_list, grid_div: float = 8.0,
                         cell_cap: int = raster.DEFAULT_CELL_CAP) -> TubularProfile:
    """mu(eps) for one fixed polygon over a list of eps values."""
    prof = TubularProfile(domain_id=polygon.content_hash())
    ok = simplicity_check(polygon)
    if not ok:
        raise InvalidDomainError("polygon is not simple")
    for eps in sorted(float(e) for e in eps_list):
        h = eps / grid_div
        mu, err = tube_volume(polygon, eps, h, check_simple=False, cell_cap=cell_cap)
        prof.entries.append(TubeEntry(eps, mu, err, polygon.meta.get("level", -1), h))
    return prof
