"""Statistically self-similar snowflakes coupled to their branching tree,
and the Minkowski-content / heat-content limit experiments."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import gbp, rng
from .errors import InvalidParameterError, ResourceCapError
from .generator import _block_template
from .geometry import Polyline
from .heat import heat_fd
from .tubular import polygon_tube_profile

_SQRT3 = math.sqrt(3.0)
_CUT_SLACK = 1e-9  # keeps exactly-at-the-cut cells on the frontier side
DEFAULT_CELL_CAP = 10_000_000


def _side_seed(seed: int, side: int) -> int:
    return int(rng.hash64(seed, 0x51DE, side))


def _refine_side(law: gbp.OffspringLaw, side_seed: int, t_cut: float,
                 cell_cap: int = DEFAULT_CELL_CAP):
    """Leaf cells of one curve copy on [0,1] as (starts, deltas), curve order.

    A cell with birth time sigma = -log(scale) <= t_cut is replaced by the
    block of its hash-derived type; others pass through unchanged.  Types
    come from path hashes exactly as in gbp.simulate_tree, so cutting the
    same seed at different t_cut yields cross-sections of one realization.
    """
    templates = []
    for a in law.types:
        tpl = _block_template(int(a))
        templates.append(tpl[:, 0] + 1j * tpl[:, 1])
    m_arr = np.asarray(law.m, dtype=np.int64)
    log_ell = np.log(np.asarray(law.ell, dtype=np.float64))

    start = np.zeros(1, dtype=np.complex128)
    delta = np.ones(1, dtype=np.complex128)
    hashes = np.atleast_1d(rng.hash64(side_seed, 0x7EE))
    sigma = np.zeros(1)

    while True:
        types = gbp._hash_types(law, hashes).astype(np.int64)
        grow = sigma <= t_cut
        if not np.any(grow):
            return start, delta
        cnt = np.where(grow, m_arr[types], 1)
        offs = np.cumsum(cnt) - cnt
        total = int(cnt.sum())
        if total > cell_cap:
            raise ResourceCapError(
                f"cell cap {cell_cap} exceeded at scale {float(np.exp(-sigma.min())):.3g}")
        ns = np.empty(total, dtype=np.complex128)
        nd = np.empty(total, dtype=np.complex128)
        nh = np.empty(total, dtype=np.uint64)
        nsig = np.empty(total)

        done = np.flatnonzero(~grow)
        if len(done):
            slots = offs[done]
            ns[slots] = start[done]
            nd[slots] = delta[done]
            nh[slots] = hashes[done]
            nsig[slots] = sigma[done]
        for ti in range(len(law.types)):
            sel = np.flatnonzero(grow & (types == ti))
            if not len(sel):
                continue
            tpl = templates[ti]
            m = len(tpl) - 1
            idx = (offs[sel][:, None] + np.arange(m)[None, :]).ravel()
            ns[idx] = (start[sel, None] + delta[sel, None] * tpl[None, :-1]).ravel()
            nd[idx] = (delta[sel, None] * np.diff(tpl)[None, :]).ravel()
            child_no = np.tile(np.arange(1, m + 1, dtype=np.uint64), len(sel))
            nh[idx] = rng.hash64(np.repeat(hashes[sel], m), child_no)
            nsig[idx] = np.repeat(sigma[sel] + log_ell[ti], m)
        start, delta, hashes, sigma = ns, nd, nh, nsig


@dataclass
class SelfSimilarRealization:
    """One random snowflake together with the three side trees it was cut from."""

    law: gbp.OffspringLaw
    polygon: Polyline
    trees: list
    gamma: float
    seed: int
    eps_min: float
    t_cut: float

    @property
    def tree(self) -> gbp.GbpTree:
        return self.trees[0]

    def side_counts(self) -> list[int]:
        return list(self.polygon.meta["side_counts"])

    def martingale_mean(self, t: float | None = None) -> float:
        """Average of the three side martingales M_t (unit expectation)."""
        t = self.t_cut if t is None else t
        return float(np.mean([gbp.martingale(tr, t, self.gamma) for tr in self.trees]))

    def recut(self, eps_min: float, with_trees: bool = False) -> "SelfSimilarRealization":
        """The same realization truncated at a different scale."""
        return sample_snowflake(self.law.probs, eps_min, self.seed,
                                alphabet=self.law.types, with_trees=with_trees)


def sample_snowflake(probs, eps_min: float, seed: int, alphabet=(1, 2),
                     with_trees: bool = True,
                     cell_cap: int = DEFAULT_CELL_CAP) -> SelfSimilarRealization:
    """Random snowflake with i.i.d. cell types, cut where cell scale drops
    below eps_min; the three sides are independent copies.

    Deterministic per seed; the returned trees share the polygon's random
    stream, so the polygon's leaf cells are exactly the trees' frontiers at
    the cut time.
    """
    if not (0 < eps_min < 1):
        raise InvalidParameterError("eps_min must lie in (0, 1)")
    law = gbp.OffspringLaw.from_alphabet(alphabet, probs)
    if not gbp.lattice_check(law):
        warnings.warn("law has a single multiplicative scale; "
                      "Nerman-type limits may oscillate", stacklevel=2)
    gamma = gbp.malthusian(law)
    t_cut = -math.log(eps_min) - _CUT_SLACK

    corners = [0.0 + 0.0j, 1.0 + 0.0j, 0.5 - 1j * _SQRT3 / 2.0]
    chains = []
    counts = []
    trees = []
    for side in range(3):
        sseed = _side_seed(seed, side)
        start, delta = _refine_side(law, sseed, t_cut, cell_cap=cell_cap)
        counts.append(len(start))
        p1, p2 = corners[side], corners[(side + 1) % 3]
        chains.append(p1 + start * (p2 - p1))
        if with_trees:
            trees.append(gbp.simulate_tree(law, t_cut, sseed, pop_cap=cell_cap))
    pts = np.concatenate(chains)
    poly = Polyline(np.column_stack([pts.real, pts.imag]), closed=True)
    poly.meta = {"seq": {"kind": "selfsim", "probs": list(law.probs),
                         "alphabet": list(law.types), "seed": int(seed)},
                 "level": -1, "eps_min": eps_min, "side_counts": counts}
    return SelfSimilarRealization(law, poly, trees, gamma, int(seed), eps_min, t_cut)


def _stabilization(x: np.ndarray, y: np.ndarray, decade: float = 10.0):
    """Mean and max/min of y over the last decade of the (ascending) x grid."""
    lo = x[0] * 1.0  # x ascending; last decade means the smallest-x decade
    sel = x <= x[0] * decade
    ys = y[sel]
    return float(ys.mean()), float(ys.max() / ys.min())


def minkowski_limit_experiment(realizations, eps_grid) -> dict:
    """Per seed: y(eps) = eps^{gamma-2} mu(eps) over the grid and the side
    martingale at the cut horizon; ensemble: stabilization spreads, the
    correlation of the stabilized y with M_T, and the content estimate
    mean(y/M_T)."""
    eps = np.asarray(sorted(float(e) for e in eps_grid))
    per_seed = []
    for r in realizations:
        if eps[0] < 8.0 * r.eps_min:
            raise InvalidParameterError(
                f"eps grid must stay above 8 eps_min = {8 * r.eps_min}")
        prof = polygon_tube_profile(r.polygon, eps)
        y = prof.eps() ** (r.gamma - 2.0) * prof.mu()
        T = math.log(1.0 / (8.0 * r.eps_min))
        m = r.martingale_mean(min(T, r.t_cut))
        ybar, spread = _stabilization(prof.eps(), y)
        per_seed.append({"seed": r.seed, "ybar": ybar, "spread": spread, "M_T": m,
                         "y": y.tolist(), "eps": prof.eps().tolist()})
    yb = np.array([d["ybar"] for d in per_seed])
    mt = np.array([d["M_T"] for d in per_seed])
    ratio = yb / mt
    corr = float(np.corrcoef(yb, mt)[0, 1]) if len(yb) > 1 else float("nan")
    return {
        "gamma": realizations[0].gamma if realizations else float("nan"),
        "per_seed": per_seed,
        "max_spread": float(max(d["spread"] for d in per_seed)),
        "correlation": corr,
        "M_hat": float(ratio.mean()),
        "M_hat_stderr": float(ratio.std(ddof=1) / math.sqrt(len(ratio))) if len(ratio) > 1 else 0.0,
        "mean_MT": float(mt.mean()),
        "stderr_MT": float(mt.std(ddof=1) / math.sqrt(len(mt))) if len(mt) > 1 else 0.0,
    }


def heat_limit_experiment(realizations, s_grid, eps_grid=None) -> dict:
    """Per seed: z(s) = s^{gamma/2-1} E(s), with E(s) from a finite-difference
    solve on the realization recut at eps = sqrt(s) (features below the
    diffusion length only move E within the reported tolerance); same
    ensemble reports as the Minkowski experiment, plus the shared-limit
    cross-ratio ybar/zbar when an eps grid is supplied."""
    s_arr = np.asarray(sorted(float(s) for s in s_grid))
    per_seed = []
    for r in realizations:
        rs = np.sqrt(s_arr)
        if rs[0] < 8.0 * r.eps_min:
            raise InvalidParameterError(
                f"sqrt(s) must stay above 8 eps_min = {8 * r.eps_min}")
        zs = []
        for s in s_arr:
            cut = r.recut(math.sqrt(s))
            h = float(cut.polygon.segment_lengths().min()) / 4.0
            E = heat_fd(cut.polygon, [s], h, check_simple=False).entries[0].E
            zs.append(s ** (r.gamma / 2.0 - 1.0) * E)
        z = np.asarray(zs)
        T = math.log(1.0 / (8.0 * r.eps_min))
        m = r.martingale_mean(min(T, r.t_cut))
        zbar, spread = _stabilization(s_arr, z)
        d = {"seed": r.seed, "zbar": zbar, "spread": spread, "M_T": m,
             "z": z.tolist(), "s": s_arr.tolist()}
        if eps_grid is not None:
            prof = polygon_tube_profile(r.polygon, sorted(float(e) for e in eps_grid))
            y = prof.eps() ** (r.gamma - 2.0) * prof.mu()
            d["ybar"] = _stabilization(prof.eps(), y)[0]
        per_seed.append(d)
    zb = np.array([d["zbar"] for d in per_seed])
    mt = np.array([d["M_T"] for d in per_seed])
    ratio = zb / mt
    out = {
        "gamma": realizations[0].gamma if realizations else float("nan"),
        "per_seed": per_seed,
        "max_spread": float(max(d["spread"] for d in per_seed)),
        "correlation": float(np.corrcoef(zb, mt)[0, 1]) if len(zb) > 1 else float("nan"),
        "E_hat": float(ratio.mean()),
        "E_hat_stderr": float(ratio.std(ddof=1) / math.sqrt(len(ratio))) if len(ratio) > 1 else 0.0,
    }
    if eps_grid is not None:
        cross = np.array([d["ybar"] / d["zbar"] for d in per_seed])
        out["cross_ratio"] = cross.tolist()
        out["cross_ratio_spread"] = float(cross.max() / cross.min())
    return out
