"""Heat content E(s) of planar domains.

Two estimators (explicit finite differences and Brownian-hitting Monte Carlo,
both for the half-Laplacian generator, so the flat-wall reference value per
unit boundary length is sqrt(2 s / pi)), the tube-volume bound functionals
that sandwich E(s), and log-slope diagnostics that read a boundary dimension
off a sampled profile.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.spatial import cKDTree

from . import raster, rng
from .errors import (
    InstabilityError,
    InvalidDomainError,
    InvalidParameterError,
    ProfileSpanError,
    ResourceCapError,
    TooFewSamplesError,
)
from .geometry import Polyline, scaled, simplicity_check
from .tubular import TubularProfile, level_for_eps

METHODS = ("fd", "mc", "bound-upper-vdb", "bound-upper-thm22", "bound-lower-proxy")


@dataclass
class HeatEntry:
    s: float
    E: float
    stderr: float = 0.0
    method: str = "fd"


@dataclass
class HeatProfile:
    """Sampled pairs (s, E(s)) with per-method provenance."""

    entries: list[HeatEntry] = field(default_factory=list)
    domain_id: str = ""

    def s(self) -> np.ndarray:
        return np.array([e.s for e in self.entries])

    def E(self) -> np.ndarray:
        return np.array([e.E for e in self.entries])

    def stderr(self) -> np.ndarray:
        return np.array([e.stderr for e in self.entries])

    def for_method(self, method: str) -> "HeatProfile":
        return HeatProfile([e for e in self.entries if e.method == method], self.domain_id)

    def sorted(self) -> "HeatProfile":
        return HeatProfile(sorted(self.entries, key=lambda e: e.s), self.domain_id)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("s,E,stderr,method\n")
        for e in self.entries:
            buf.write(f"{e.s!r},{e.E!r},{e.stderr!r},{e.method}\n")
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "domainId": self.domain_id,
                "entries": [
                    {"s": e.s, "E": e.E, "stderr": e.stderr, "method": e.method}
                    for e in self.entries
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "HeatProfile":
        d = json.loads(text)
        ents = [HeatEntry(e["s"], e["E"], e.get("stderr", 0.0), e.get("method", "fd"))
                for e in d["entries"]]
        return cls(ents, d.get("domainId", ""))


@dataclass(frozen=True)
class OmegaSchedule:
    """Cut-off radius omega(s) used by the tube-plus-remainder upper bound.

    kinds:
      - "sqrt-log":      omega(s) = sqrt(4 s log(1/s)),   valid for 0 < s < 1;
      - "iterated-log":  omega(s) = sqrt(2 d s log^i(1/s)) with the i-fold
        iterated logarithm, valid while that iterate is positive;
      - "custom":        user-supplied callable ``fn``.
    """

    kind: str = "sqrt-log"
    i: int = 1
    d: int = 2
    fn: object = None

    def omega(self, s: float) -> float:
        if s <= 0:
            raise InvalidParameterError("omega needs s > 0")
        if self.kind == "sqrt-log":
            if s >= 1:
                raise InvalidParameterError("sqrt-log schedule needs s < 1")
            return math.sqrt(4.0 * s * math.log(1.0 / s))
        if self.kind == "iterated-log":
            x = 1.0 / s
            for _ in range(self.i):
                if x <= 1.0:
                    raise InvalidParameterError(
                        f"iterated log of depth {self.i} undefined at s = {s}")
                x = math.log(x)
            if x <= 0:
                raise InvalidParameterError(
                    f"iterated log of depth {self.i} nonpositive at s = {s}")
            return math.sqrt(2.0 * self.d * s * x)
        if self.kind == "custom":
            return float(self.fn(s))
        raise InvalidParameterError(f"unknown schedule kind {self.kind!r}")


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

_FAR_BAND = 8.0  # u at distance 8 sqrt(s) is below 1e-15; outside is frozen at 0
MAX_FD_STEPS = 10_000_000


def _active_cells(polygon: Polyline, grid: raster.Grid, band: float):
    """Interior cell keys to evolve, plus an interior test for stray neighbours.

    Uses the full interior when the band around the boundary would cover most
    of it anyway, otherwise enumerates only cells within ``band`` of the
    boundary; cells beyond the band stay at u = 0 for the whole run.
    """
    full_cells = grid.nx * grid.ny
    band_est = polygon.perimeter() * 2.2 * (band + 2 * grid.h) / grid.h**2
    if full_cells <= 20_000_000 or band_est >= 0.5 * full_cells:
        mask = raster.interior_mask(polygon, grid)
        active = np.flatnonzero(mask.ravel()).astype(np.int64)

        def is_interior(keys):
            return mask.ravel()[keys]

        return active, is_interior

    keys = raster.cells_near_segments(polygon, band, grid)
    idx = raster.CrossingIndex(polygon, grid)
    rows = keys // grid.nx
    cols = keys % grid.nx
    active = keys[idx.inside(rows, grid.centers_x(cols))]

    def is_interior(ks):
        r = ks // grid.nx
        c = ks % grid.nx
        return idx.inside(r, grid.centers_x(c))

    return active, is_interior


def _fd_solve(polygon: Polyline, s_pos: np.ndarray, h: float):
    """E(s) for ascending positive times s_pos; one grid, one march."""
    s_max = float(s_pos[-1])
    band = _FAR_BAND * math.sqrt(s_max) + 2 * h
    pad = min(band, polygon.diameter())
    grid = raster.grid_for(polygon, h, pad=pad)
    active, is_interior = _active_cells(polygon, grid, band)
    n = len(active)
    if n == 0:
        return np.zeros(len(s_pos))

    # neighbour table: index into u of length n+2; slot n is the frozen
    # far field (0), slot n+1 the Dirichlet wall (1)
    nbr = np.empty((4, n), dtype=np.int64)
    wall_keys = []
    for k, off in enumerate((1, -1, grid.nx, -grid.nx)):
        nb = active + off
        pos = np.searchsorted(active, nb)
        hit = (pos < n) & (active[np.minimum(pos, n - 1)] == nb)
        nbr[k] = np.where(hit, pos, n)
        miss = np.flatnonzero(~hit)
        if len(miss):
            inter = is_interior(nb[miss])
            nbr[k][miss[~inter]] = n + 1
            wall_keys.append(nb[miss[~inter]])
    n_wall = len(np.unique(np.concatenate(wall_keys))) if wall_keys else 0
    nbr = nbr.astype(np.int32) if n + 2 < 2**31 else nbr

    dt = h * h / 4.0
    k_total = int(math.ceil(s_max / dt - 1e-12))
    if k_total > MAX_FD_STEPS:
        raise ResourceCapError(f"march would need {k_total} > {MAX_FD_STEPS} steps")

    need = set()
    for s in s_pos:
        k0 = int(math.floor(s / dt + 1e-12))
        need.add(min(k0, k_total))
        need.add(min(k0 + 1, k_total))
    need.discard(0)

    u = np.zeros(n + 2)
    u[n + 1] = 1.0
    core = u[:n]
    h2 = h * h
    bdry_half = 0.5 * n_wall * h2
    e_at = {0: bdry_half}
    acc = np.empty(n)
    for k in range(1, k_total + 1):
        np.take(u, nbr[0], out=acc)
        acc += np.take(u, nbr[1])
        acc += np.take(u, nbr[2])
        acc += np.take(u, nbr[3])
        core *= 0.5
        core += 0.125 * acc
        if k in need or k % 512 == 0:
            m = core.max()
            if m > 1.0 + 1e-9:
                raise InstabilityError(f"u reached {m} at step {k}")
            if k in need:
                e_at[k] = float(core.sum()) * h2 + bdry_half

    out = np.empty(len(s_pos))
    for i, s in enumerate(s_pos):
        k0 = int(math.floor(s / dt + 1e-12))
        frac = s / dt - k0
        if k0 >= k_total:
            out[i] = e_at[k_total]
        else:
            e0 = e_at.get(k0, bdry_half)
            out[i] = e0 + frac * (e_at[min(k0 + 1, k_total)] - e0)
    return out


def heat_fd(polygon: Polyline, s_list, grid_h: float, check_simple: bool = True) -> HeatProfile:
    """Explicit march of du/ds = (1/2) Laplacian u on the interior raster.

    Boundary cells (exterior cells touching an interior one) are held at
    u = 1, the time step is grid_h^2/4, and E(s) sums u over interior cells
    with a half-weight strip correction for the held boundary cells; snapshots
    between steps are linearly interpolated.  Accuracy needs grid_h well below
    sqrt(s) (grid_h <= sqrt(s)/8 keeps the flat-wall error under 1%).
    """
    if grid_h <= 0:
        raise InvalidParameterError("grid_h must be positive")
    min_seg = float(polygon.segment_lengths().min())
    if grid_h > min_seg / 4.0 + 1e-15:
        raise InvalidParameterError(
            f"grid_h = {grid_h} does not resolve the finest boundary feature "
            f"({min_seg}); need grid_h <= {min_seg / 4.0}")
    if not polygon.closed:
        raise InvalidDomainError("heat_fd needs a closed polygon")
    if check_simple and not simplicity_check(polygon):
        raise InvalidDomainError("polygon is not simple")
    s_arr = np.asarray([float(s) for s in s_list])
    if np.any(s_arr < 0) or np.any(np.diff(s_arr) <= 0) and len(s_arr) > 1:
        raise InvalidParameterError("s values must be nonnegative and ascending")

    prof = HeatProfile(domain_id=polygon.content_hash())
    pos = s_arr[s_arr > 0]
    vals = _fd_solve(polygon, pos, grid_h) if len(pos) else []
    j = 0
    for s in s_arr:
        if s == 0:
            prof.entries.append(HeatEntry(0.0, 0.0, 0.0, "fd"))
        else:
            prof.entries.append(HeatEntry(float(s), float(vals[j]), 0.0, "fd"))
            j += 1
    return prof


def heat_fd_profile(polygon: Polyline, s_list, grid_div: float = 8.0) -> HeatProfile:
    """One fd solve per s with grid_h = min(sqrt(s)/grid_div, min_seg/4)."""
    min_seg = float(polygon.segment_lengths().min())
    prof = HeatProfile(domain_id=polygon.content_hash())
    ok = simplicity_check(polygon)
    if not ok:
        raise InvalidDomainError("polygon is not simple")
    for s in sorted(float(s) for s in s_list):
        h = min(math.sqrt(s) / grid_div, min_seg / 4.0)
        sub = heat_fd(polygon, [s], h, check_simple=False)
        prof.entries.extend(sub.entries)
    return prof


def snowflake_heat_profile(seq, s_list, method: str = "fd", trials: int = 200_000,
                           seed: int = 0, step_ctl: "StepControl | None" = None) -> HeatProfile:
    """Heat profile of the snowflake built from ``seq``, one construction
    level per s: the smallest n with eps_n <= sqrt(s), solved at
    grid_h = eps_n/4 (fd) or with default step control (mc).

    Finer levels only move E within the reported tolerance at that s, since
    their features sit below the diffusion length.
    """
    from .generator import snowflake

    cache: dict[int, Polyline] = {}
    prof = HeatProfile()
    for s in sorted(float(s) for s in s_list):
        n = level_for_eps(seq, 4.0 * math.sqrt(s))
        if n not in cache:
            cache[n] = snowflake(seq, n)
        poly = cache[n]
        if not prof.domain_id:
            prof.domain_id = poly.content_hash()
        if method == "fd":
            h = float(poly.segment_lengths().min()) / 4.0
            e = heat_fd(poly, [s], h, check_simple=False)
            prof.entries.extend(e.entries)
        elif method == "mc":
            E, err = heat_mc(poly, s, trials, step_ctl, seed=seed, check_simple=False)
            prof.entries.append(HeatEntry(s, E, err, "mc"))
        else:
            raise InvalidParameterError(f"unknown method {method!r}")
    return prof


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepControl:
    """Step-size and absorption tuning for the Brownian hitting estimator.

    ``None`` fields are resolved per run: dt_max = s/64 and
    absorb_halo = 0.003 sqrt(s).  rho scales the distance-limited step
    sqrt(dt) = rho * dist.  Halving dt_max is the standard bias test.
    """

    dt_max: float | None = None
    absorb_halo: float | None = None
    rho: float = 0.5
    batch: int = 250_000
    max_iters: int = 500_000

    def resolve(self, s: float):
        dt_max = self.dt_max if self.dt_max is not None else s / 64.0
        halo = self.absorb_halo if self.absorb_halo is not None else 0.003 * math.sqrt(s)
        if dt_max <= 0 or halo <= 0 or not (0 < self.rho <= 1):
            raise InvalidParameterError("step control values must be positive (rho in (0,1])")
        return dt_max, halo


class _BoundaryIndex:
    """Distance queries against the boundary, two-tier.

    A coarse raster distance transform gives a certified lower bound on the
    distance for every point at O(1) cost; only points whose bound is small
    go through the kd-tree for the exact distance and nearest segment.
    """

    def __init__(self, polygon: Polyline, spacing: float, raster_n: int = 512):
        from scipy import ndimage

        a, b = polygon.segment_endpoints()
        lens = polygon.segment_lengths()
        cnt = np.maximum(np.ceil(lens / spacing).astype(np.int64), 1)
        total = int(cnt.sum())
        seg = np.repeat(np.arange(len(a)), cnt)
        offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        t = (offs + 0.5) / cnt[seg]
        pts = a[seg] + t[:, None] * (b[seg] - a[seg])
        self.a, self.b = a, b
        self.seg_of_pt = seg
        self.spacing = spacing
        self.tree = cKDTree(pts, leafsize=64)
        self.k = min(4, total)

        lo, hi = polygon.bbox()
        h = float((hi - lo).max()) / raster_n
        self.r_o = lo - 2 * h
        self.r_h = h
        nx = int(np.ceil((hi[0] - lo[0]) / h)) + 5
        ny = int(np.ceil((hi[1] - lo[1]) / h)) + 5
        mark = np.zeros((ny, nx), dtype=bool)
        ii = ((pts[:, 0] - self.r_o[0]) / h).astype(np.int64)
        jj = ((pts[:, 1] - self.r_o[1]) / h).astype(np.int64)
        mark[jj, ii] = True
        edt = ndimage.distance_transform_edt(~mark)
        self.d_lb_grid = np.maximum(edt * h - 1.5 * h - 0.5 * spacing, 0.0)
        self._nx, self._ny = nx, ny

    def lower_bound(self, p: np.ndarray) -> np.ndarray:
        ii = np.clip(((p[:, 0] - self.r_o[0]) / self.r_h).astype(np.int64), 0, self._nx - 1)
        jj = np.clip(((p[:, 1] - self.r_o[1]) / self.r_h).astype(np.int64), 0, self._ny - 1)
        return self.d_lb_grid[jj, ii]

    def nearest(self, p: np.ndarray):
        """(distance, nearest segment start, nearest segment end) per row of p."""
        _, ip = self.tree.query(p, k=self.k)
        if self.k == 1:
            ip = ip[:, None]
        segs = self.seg_of_pt[ip]                      # (B, k)
        a = self.a[segs]
        b = self.b[segs]
        dx = p[:, None, 0] - a[..., 0]
        dy = p[:, None, 1] - a[..., 1]
        ex = b[..., 0] - a[..., 0]
        ey = b[..., 1] - a[..., 1]
        e2 = np.maximum(ex * ex + ey * ey, 1e-300)
        t = np.clip((dx * ex + dy * ey) / e2, 0.0, 1.0)
        qx = dx - t * ex
        qy = dy - t * ey
        d2 = qx * qx + qy * qy
        j = np.argmin(d2, axis=1)
        rows = np.arange(len(p))
        return np.sqrt(d2[rows, j]), a[rows, j], b[rows, j]


def _line_offset(p, a, b):
    """Signed distance from p to the supporting line of segment (a, b)."""
    ex = b[:, 0] - a[:, 0]
    ey = b[:, 1] - a[:, 1]
    norm = np.sqrt(np.maximum(ex * ex + ey * ey, 1e-300))
    return (ex * (p[:, 1] - a[:, 1]) - ey * (p[:, 0] - a[:, 0])) / norm


def heat_mc(polygon: Polyline, s: float, trials: int, step_ctl: StepControl | None = None,
            seed: int = 0, check_simple: bool = True):
    """(E, stderr) by Brownian hitting: E = area * P(hit boundary by s).

    Start points are uniform in the domain (rejection from the bounding box);
    paths take distance-adaptive steps, are absorbed inside the halo, and a
    Brownian-bridge test against the nearest segment's supporting line catches
    in-flight crossings.  All randomness is counter-based on (seed, trial,
    step), so the result is independent of batching.
    """
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    if s < 0:
        raise InvalidParameterError("s must be nonnegative")
    if not polygon.closed:
        raise InvalidDomainError("heat_mc needs a closed polygon")
    if check_simple and not simplicity_check(polygon):
        raise InvalidDomainError("polygon is not simple")
    area = polygon.area()
    if s == 0:
        return 0.0, 0.0
    ctl = step_ctl or StepControl()
    dt_max, halo = ctl.resolve(s)

    spacing = max(4.0 * halo, polygon.diameter() / 2048.0)
    # resolve the retirement raster down to the diffusion scale when possible
    raster_n = int(np.clip(polygon.diameter() / (6.0 * math.sqrt(s)), 512, 4096))
    bindex = _BoundaryIndex(polygon, spacing, raster_n=raster_n)
    geom = polygon.shapely_polygon()
    shapely.prepare(geom)
    lo, hi = polygon.bbox()
    span = hi - lo

    hits = 0
    for t0 in range(0, trials, ctl.batch):
        tid = np.arange(t0, min(t0 + ctl.batch, trials), dtype=np.uint64)
        # rejection-sampled uniform starts, attempt index in the counter
        pos = np.empty((len(tid), 2))
        todo = np.arange(len(tid))
        attempt = 0
        while len(todo):
            x = lo[0] + span[0] * rng.uniform(seed, 0x57A, tid[todo], attempt, 0)
            y = lo[1] + span[1] * rng.uniform(seed, 0x57A, tid[todo], attempt, 1)
            ok = shapely.contains_xy(geom, x, y)
            pos[todo[ok], 0] = x[ok]
            pos[todo[ok], 1] = y[ok]
            todo = todo[~ok]
            attempt += 1
            if attempt > 10_000:
                raise InvalidDomainError("rejection sampling failed; degenerate polygon?")

        t = np.zeros(len(tid))
        step = np.zeros(len(tid), dtype=np.uint64)
        alive_tid = tid
        # near-boundary band: outside it the bridge/absorption probabilities
        # at the capped step are below exp(-2 * 4.5^2) and can be skipped
        near_cut = max(4.5 * math.sqrt(dt_max), 8.0 * halo)
        it = 0
        while len(alive_tid):
            it += 1
            if it > ctl.max_iters:
                raise ResourceCapError(f"walk exceeded {ctl.max_iters} iterations")
            rem = s - t
            d_lb = bindex.lower_bound(pos)
            # retire walkers that provably cannot reach the boundary in time
            keep = d_lb <= 6.0 * np.sqrt(rem)
            if not keep.all():
                pos, t, step, alive_tid = pos[keep], t[keep], step[keep], alive_tid[keep]
                d_lb, rem = d_lb[keep], rem[keep]
                if not len(alive_tid):
                    break
            dt = np.minimum(dt_max, rem)
            hit_now = np.zeros(len(alive_tid), dtype=bool)
            ni = np.flatnonzero(d_lb < near_cut)
            if len(ni):
                d, a, b = bindex.nearest(pos[ni])
                hit_now[ni] = d < halo
                dt[ni] = np.maximum(np.minimum(dt[ni], (ctl.rho * d) ** 2), 1e-300)
            gx, gy = rng.normal_pair(seed, 0xB0B, alive_tid, step)
            sq = np.sqrt(dt)
            new = pos + np.column_stack([sq * gx, sq * gy])
            if len(ni):
                d1 = _line_offset(pos[ni], a, b)
                d2 = _line_offset(new[ni], a, b)
                crossed = d1 * d2 < 0
                with np.errstate(over="ignore", divide="ignore"):
                    pbridge = np.exp(-2.0 * np.abs(d1 * d2) / dt[ni])
                u = rng.uniform(seed, 0xB1D, alive_tid[ni], step[ni])
                crossed |= u < pbridge
                hit_now[ni] |= crossed
            hits += int(hit_now.sum())
            keep = ~hit_now
            pos = new[keep]
            t = t[keep] + dt[keep]
            step = step[keep] + np.uint64(1)
            alive_tid = alive_tid[keep]
            live = t < s * (1.0 - 1e-12)
            pos, t, step, alive_tid = pos[live], t[live], step[live], alive_tid[live]

    p = hits / trials
    return area * p, area * math.sqrt(max(p * (1.0 - p), 0.0) / trials)


# ---------------------------------------------------------------------------
# bound functionals
# ---------------------------------------------------------------------------


class MuHat:
    """mu(eps) read off a tubular profile, extended at both ends.

    Below the smallest sample: the power law fitted to the two smallest bins.
    Above the largest: the saturation value mu(eps_max).  In between: linear
    interpolation of log mu against log eps.
    """

    def __init__(self, profile: TubularProfile):
        prof = profile.sorted()
        eps, mu = prof.eps(), prof.mu()
        if len(eps) < 2:
            raise TooFewSamplesError("need at least two profile samples")
        if np.any(mu <= 0) or np.any(eps <= 0):
            raise InvalidParameterError("profile values must be positive")
        self.le = np.log(eps)
        self.lmu = np.log(mu)
        self.eps_min = float(eps[0])
        self.eps_max = float(eps[-1])
        self.mu_sat = float(mu[-1])
        self.alpha = float((self.lmu[1] - self.lmu[0]) / (self.le[1] - self.le[0]))
        self.c = float(mu[0] / eps[0] ** self.alpha)
        self.saturated = abs(mu[-1] - mu[-2]) <= 1e-3 * mu[-1]

    def __call__(self, eps):
        eps = np.asarray(eps, dtype=np.float64)
        scalar = eps.ndim == 0
        eps = np.atleast_1d(eps)
        out = np.empty_like(eps)
        below = eps < self.eps_min
        above = eps > self.eps_max
        mid = ~(below | above)
        out[below] = self.c * eps[below] ** self.alpha
        out[above] = self.mu_sat
        out[mid] = np.exp(np.interp(np.log(eps[mid]), self.le, self.lmu))
        return float(out[0]) if scalar else out


def vdb_upper(profile: TubularProfile, s: float, rel_tol: float = 1e-4) -> float:
    """Upper bound 2^{d/2} s^{-1} Int_0^inf eps e^{-eps^2/4s} mu(eps) d eps, d = 2.

    The profile must reach below sqrt(s); above the largest sample mu is
    extended by its saturation value, which is sound once the samples have
    visibly saturated or reach 6 sqrt(s) (the Gaussian weight beyond that is
    below 1e-15 relative).
    """
    if s <= 0:
        raise InvalidParameterError("s must be positive")
    mu = MuHat(profile)
    rs = math.sqrt(s)
    if mu.eps_min > rs:
        raise ProfileSpanError(
            f"profile starts at eps = {mu.eps_min}; the bound at s = {s} needs "
            f"samples down to sqrt(s) = {rs}")
    if not mu.saturated and mu.eps_max < 6.0 * rs:
        raise ProfileSpanError(
            f"profile ends at eps = {mu.eps_max} without saturating; the bound "
            f"at s = {s} needs samples up to {6.0 * rs}")

    lo = mu.eps_min * 1e-6
    # analytic stub below lo (Gaussian weight is 1 there) and tail above eps_max
    head = mu.c * lo ** (2.0 + mu.alpha) / (2.0 + mu.alpha) if mu.alpha > -2 else 0.0
    tail = mu.mu_sat * 2.0 * s * math.exp(-mu.eps_max**2 / (4.0 * s))

    def trap(m):
        x = np.exp(np.linspace(math.log(lo), math.log(mu.eps_max), m))
        f = x * np.exp(-x * x / (4.0 * s)) * mu(x) * x  # extra x: d eps = x d log eps
        return float(np.trapezoid(f, np.log(x)))

    m = 1024
    prev = trap(m)
    while m < 1 << 18:
        m *= 2
        cur = trap(m)
        if abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            prev = cur
            break
        prev = cur
    return 2.0 / s * (head + prev + tail)


def thm22_upper(profile: TubularProfile, s: float, omega: OmegaSchedule, vol: float) -> float:
    """Upper bound mu(omega(s)) + 2^{(d+2)/2} vol e^{-omega(s)^2/4s}, d = 2."""
    w = omega.omega(s)
    mu = MuHat(profile)
    return float(mu(w)) + 4.0 * vol * math.exp(-w * w / (4.0 * s))


def lower_proxy(profile: TubularProfile, s: float, c1: float, c2: float) -> float:
    """Lower-bound proxy c1 * mu(c2 sqrt(s)); c1, c2 come from calibration."""
    if c1 <= 0 or c2 <= 0:
        raise InvalidParameterError("c1 and c2 must be positive")
    mu = MuHat(profile)
    return c1 * float(mu(c2 * math.sqrt(s)))


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def log_slope(profile: HeatProfile):
    """Boundary-dimension diagnostics from a heat profile, d = 2.

    Per sample: q(s) = 1 - log E(s)/log s (implied dimension 2 q).  Also
    reports local log-log slopes between adjacent samples (implied dimension
    2 (1 - slope), free of the constant-prefactor bias) and the global
    least-squares slope as diagnostics["fit_dim"].  The lower/upper fields
    are min/max of 2 q over the small-s half of the samples.
    """
    from .dimension import DimEstimate

    prof = profile.sorted()
    s = prof.s()
    E = prof.E()
    if len(s) < 8:
        raise TooFewSamplesError("log_slope needs >= 8 samples")
    if s[0] <= 0 or E.min() <= 0:
        raise InvalidParameterError("log_slope needs positive s and E")
    if s[-1] / s[0] < 99.0:
        raise TooFewSamplesError("profile must span >= 2 decades of s")
    ls, lE = np.log(s), np.log(E)
    q = 1.0 - lE / ls
    slopes = np.diff(lE) / np.diff(ls)
    slope_dims = 2.0 * (1.0 - slopes)
    fit = np.polyfit(ls, lE, 1)[0]
    half = q[: max(len(q) // 2, 4)]
    return DimEstimate(
        lower=float(2.0 * half.min()),
        upper=float(2.0 * half.max()),
        method="heat-log-slope",
        point=float(2.0 * np.median(half)),
        diagnostics={
            "s": s.tolist(),
            "q": q.tolist(),
            "slopes": slopes.tolist(),
            "slope_dims": slope_dims.tolist(),
            "fit_dim": float(2.0 * (1.0 - fit)),
            "windows": [
                {"s": [float(s[i]), float(s[i + 1])], "dim": float(slope_dims[i])}
                for i in range(len(slopes))
            ],
        },
    )


def abelian_check(tube: TubularProfile, heat: HeatProfile, gamma: float) -> dict:
    """Ratio of E(s) to its tube-volume prediction s^{1-gamma/2} Ltilde(1/s).

    The slowly varying factor is read off the tubular profile via
    L(1/eps) = mu(eps) eps^{gamma-2} and evaluated at eps = 2 sqrt(s); a
    bounded ratio across scales is the pass condition.
    """
    mu = MuHat(tube)
    prof = heat.sorted()
    ss, ratios = [], []
    for e in prof.entries:
        if e.s <= 0 or e.E <= 0:
            continue
        eps = 2.0 * math.sqrt(e.s)
        ltilde = float(mu(eps)) * eps ** (gamma - 2.0)
        pred = e.s ** (1.0 - gamma / 2.0) * ltilde
        ss.append(e.s)
        ratios.append(e.E / pred)
    if not ratios:
        raise TooFewSamplesError("no usable heat samples")
    r = np.asarray(ratios)
    return {
        "s": ss,
        "ratio": ratios,
        "min": float(r.min()),
        "max": float(r.max()),
        "spread": float(r.max() / r.min()),
        "gamma": gamma,
    }


def scaling_check(polygon: Polyline, r: float, s: float) -> dict:
    """Compare E_{rD}(s) against r^2 E_D(s/r^2), computed on unrelated grids."""
    if r <= 0:
        raise InvalidParameterError("r must be positive")
    if r == 1.0:
        h = min(math.sqrt(s) / 8.0, float(polygon.segment_lengths().min()) / 4.0)
        E = heat_fd(polygon, [s], h).entries[0].E
        return {"r": 1.0, "s": s, "E_scaled": E, "E_reference": E, "rel_discrepancy": 0.0}
    min_seg = float(polygon.segment_lengths().min())
    s_base = s / (r * r)
    h_base = min(math.sqrt(s_base) / 8.0, min_seg / 4.0)
    E_base = heat_fd(polygon, [s_base], h_base).entries[0].E
    small = scaled(polygon, r)
    h_r = min(math.sqrt(s) / 11.0, r * min_seg / 4.0)
    E_r = heat_fd(small, [s], h_r, check_simple=False).entries[0].E
    ref = r * r * E_base
    return {
        "r": r,
        "s": s,
        "E_scaled": E_r,
        "E_reference": ref,
        "rel_discrepancy": abs(E_r - ref) / max(E_r, ref),
    }
