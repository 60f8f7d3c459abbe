"""Command-line interface: reproducible experiments over the library modules.

Exit codes: 0 success, 2 invalid parameters or unusable input, 3 resource cap.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import carpet as carpet_mod
from . import dimension, gbp, heat, selfsim, tubular
from .cache import Cache
from .errors import KochflakeError, ResourceCapError
from .generator import ScaleSequence, koch_curve, snowflake
from .geometry import Polyline


def _add_sequence_args(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--seq", help="comma-separated block parameters, cycled as needed")
    g.add_argument("--rule", choices=["example33"], help="named deterministic sequence")
    g.add_argument("--iid", help="ALPHABET:PROBS, e.g. 1,2:0.5,0.5 (uses --seed)")


def _sequence(args, depth_hint: int = 256) -> ScaleSequence:
    if getattr(args, "rule", None):
        return ScaleSequence.example33()
    if getattr(args, "iid", None):
        alpha, probs = args.iid.split(":")
        return ScaleSequence.iid([int(a) for a in alpha.split(",")],
                                 [float(p) for p in probs.split(",")],
                                 getattr(args, "seed", 0) or 0)
    vals = [int(v) for v in args.seq.split(",")]
    if len(vals) == 1:
        return ScaleSequence.constant(vals[0])
    reps = max(1, -(-depth_hint // len(vals)))
    return ScaleSequence.explicit(vals * reps)


def _s_grid(args) -> list[float]:
    lo, hi = args.s_from, args.s_to
    if not (0 < lo <= hi):
        raise KochflakeError("need 0 < --s-from <= --s-to")
    n = max(2, int(round(args.s_per_decade * math.log10(hi / lo))) + 1) if hi > lo else 1
    return list(np.geomspace(lo, hi, n))


def _write(path: str | None, text: str, artifacts: dict):
    if path:
        with open(path, "w") as f:
            f.write(text)
        artifacts[path] = hashlib.sha256(text.encode()).hexdigest()[:16]
    else:
        sys.stdout.write(text)


def _finish(args, summary: str, artifacts: dict, params: dict) -> int:
    if getattr(args, "manifest", None):
        manifest = {"command": args.command, "parameters": params,
                    "artifacts": artifacts, "threads": args.threads}
        with open(args.manifest, "w") as f:
            json.dump(manifest, f, indent=1, sort_keys=True)
    print(summary)
    return 0


# -- subcommand bodies -------------------------------------------------------


def _cmd_generate(args) -> int:
    seq = _sequence(args, depth_hint=args.level)
    curve = snowflake(seq, args.level) if args.snowflake else koch_curve(seq, args.level)
    artifacts = {}
    if args.svg:
        _write(args.svg, curve.to_svg(), artifacts)
    if args.json:
        _write(args.json, curve.to_json(), artifacts)
    kind = "snowflake" if args.snowflake else "curve"
    return _finish(args, f"{kind} level {args.level}: {curve.n_segments} segments, "
                         f"hash {curve.content_hash()}", artifacts, vars(args))


def _cmd_carpet(args) -> int:
    pat = carpet_mod.Pattern.parse(args.pattern)
    hd, mk = carpet_mod.carpet_dims(pat)
    shape = (carpet_mod.carpet_domain(pat, args.level) if args.kind == "domain"
             else carpet_mod.carpet_curve(pat, args.level))
    artifacts = {}
    if args.svg:
        _write(args.svg, shape.to_svg(), artifacts)
    if args.json:
        _write(args.json, shape.to_json(), artifacts)
    return _finish(args, f"carpet {args.kind} level {args.level}: "
                         f"dim_H {hd:.6f}, dim_M {mk:.6f}", artifacts, vars(args))


def _cmd_tube(args) -> int:
    seq = _sequence(args)
    n = max(2, int(round(args.eps_per_decade * math.log10(args.eps_to / args.eps_from))) + 1)
    eps = list(np.geomspace(args.eps_from, args.eps_to, n))
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}

    def compute():
        return json.loads(tubular.tube_profile(seq, eps).to_json())

    if args.cache:
        cache = Cache()
        data, hit = cache.fetch("tubular", "tube_profile", params, compute)
        note = "cache hit" if hit else "computed"
    else:
        data, note = compute(), "computed"
    prof = tubular.TubularProfile.from_json(json.dumps(data))
    artifacts = {}
    _write(args.csv, prof.to_csv(), artifacts) if args.csv else None
    if args.json:
        _write(args.json, prof.to_json(), artifacts)
    if not (args.csv or args.json):
        sys.stdout.write(prof.to_csv())
    return _finish(args, f"tube profile: {len(prof.entries)} samples ({note})",
                   artifacts, params)


def _cmd_dims(args) -> int:
    seq = _sequence(args, depth_hint=args.n)
    est = dimension.liminf_limsup_dim(seq, args.n)
    out = {"lower": est.lower, "upper": est.upper, "point": est.point}
    artifacts = {}
    text = json.dumps(out)
    if args.json:
        _write(args.json if isinstance(args.json, str) else None, text + "\n", artifacts)
    else:
        print(text)
    return _finish(args, f"dims at n={args.n}: [{est.lower:.6f}, {est.upper:.6f}]",
                   artifacts, vars(args))


def _cmd_heat(args) -> int:
    seq = _sequence(args, depth_hint=(args.level or 64))
    s_list = _s_grid(args)
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}

    def compute():
        if args.level is not None:
            poly = snowflake(seq, args.level)
            if args.method == "fd":
                prof = heat.heat_fd_profile(poly, s_list)
            else:
                prof = heat.HeatProfile(domain_id=poly.content_hash())
                for s in s_list:
                    E, err = heat.heat_mc(poly, s, args.trials, seed=args.seed or 0,
                                          check_simple=False)
                    prof.entries.append(heat.HeatEntry(s, E, err, "mc"))
        else:
            prof = heat.snowflake_heat_profile(seq, s_list, method=args.method,
                                               trials=args.trials, seed=args.seed or 0)
        return json.loads(prof.to_json())

    if args.cache:
        data, hit = Cache().fetch("heat", args.method, params, compute)
        note = "cache hit" if hit else "computed"
    else:
        data, note = compute(), "computed"
    prof = heat.HeatProfile.from_json(json.dumps(data))
    artifacts = {}
    if args.out:
        _write(args.out, prof.to_csv(), artifacts)
    else:
        sys.stdout.write(prof.to_csv())
    return _finish(args, f"heat profile ({args.method}): {len(prof.entries)} samples "
                         f"({note})", artifacts, params)


def _cmd_bounds(args) -> int:
    seq = _sequence(args)
    s = args.s
    eps = list(np.geomspace(math.sqrt(s) / 4.0, 8.0 * math.sqrt(s), 25))
    tube = tubular.tube_profile(seq, eps)
    omega = heat.OmegaSchedule("sqrt-log")
    n = tubular.level_for_eps(seq, 4.0 * math.sqrt(s))
    poly = snowflake(seq, n)
    fd = heat.heat_fd(poly, [s], float(poly.segment_lengths().min()) / 4.0,
                      check_simple=False).entries[0].E
    out = {
        "s": s,
        "fd": fd,
        "vdb_upper": heat.vdb_upper(tube, s),
        "thm22_upper": heat.thm22_upper(tube, s, omega, poly.area()),
        "lower_proxy": heat.lower_proxy(tube, s, args.c1, args.c2),
    }
    text = json.dumps(out) + "\n"
    artifacts = {}
    if args.json:
        _write(args.json, text, artifacts)
    else:
        sys.stdout.write(text)
    return _finish(args, f"bounds at s={s:g}: fd={fd:.4g} <= vdb={out['vdb_upper']:.4g}",
                   artifacts, vars(args))


def _cmd_gbp(args) -> int:
    law = gbp.OffspringLaw.from_alphabet(
        [int(a) for a in args.alphabet.split(",")],
        [float(p) for p in args.probs.split(",")])
    gamma = gbp.malthusian(law)
    out = {
        "gamma": gamma,
        "non_lattice": gbp.lattice_check(law),
        "xlogx": gbp.xlogx_check(law, gamma)["value"],
    }
    if args.seeds:
        seeds = range(args.seed or 0, (args.seed or 0) + args.seeds)
        out["martingale"] = gbp.martingale_ensemble(law, args.t, gamma, seeds)
        out["martingale"].pop("values")
        phi = gbp.indicator_window(1.0)
        out["nerman"] = gbp.nerman_experiment(law, phi, gamma, args.t, seeds)
        out["nerman"].pop("ratios")
    text = json.dumps(out) + "\n"
    artifacts = {}
    if args.json:
        _write(args.json, text, artifacts)
    else:
        sys.stdout.write(text)
    return _finish(args, f"gbp: gamma={gamma:.12f}", artifacts, vars(args))


def _cmd_selfsim(args) -> int:
    probs = [float(p) for p in args.probs.split(",")]
    alphabet = tuple(int(a) for a in args.alphabet.split(","))
    seeds = range(args.seed or 0, (args.seed or 0) + args.seeds)
    reals = [selfsim.sample_snowflake(probs, args.eps_min, s, alphabet=alphabet)
             for s in seeds]
    if args.experiment == "minkowski":
        grid = np.geomspace(8.5 * args.eps_min, 0.1, 17)
        rep = selfsim.minkowski_limit_experiment(reals, grid)
    else:
        grid = np.geomspace((8.5 * args.eps_min) ** 2, 0.0025, 7)
        rep = selfsim.heat_limit_experiment(reals, grid)
    rep_small = {k: v for k, v in rep.items() if k != "per_seed"}
    text = json.dumps(rep_small) + "\n"
    artifacts = {}
    if args.json:
        _write(args.json, json.dumps(rep) + "\n", artifacts)
    sys.stdout.write(text)
    return _finish(args, f"selfsim {args.experiment}: corr="
                         f"{rep['correlation']:.3f}", artifacts, vars(args))


def _cmd_report(args) -> int:
    paths = [p for p in (args.inputs.split(",") if args.inputs else []) if p]
    if not paths:
        raise KochflakeError("report needs at least one input profile")
    panels = []
    for path in paths:
        if not os.path.isfile(path):
            raise KochflakeError(f"input not found: {path}")
        with open(path) as f:
            data = json.load(f)
        if "entries" not in data:
            raise KochflakeError(f"schema mismatch in {path}: missing 'entries'")
        if data["entries"] and "eps" in data["entries"][0]:
            prof = tubular.TubularProfile.from_json(json.dumps(data))
            le, lmu = np.log(prof.eps()), np.log(prof.mu())
            slope = float(np.polyfit(le, lmu, 1)[0])
            panels.append({"input": path, "kind": "tube", "slope": slope,
                           "dimension": 2.0 - slope,
                           "series": [[float(a), float(b)] for a, b in zip(prof.eps(), prof.mu())]})
        else:
            prof = heat.HeatProfile.from_json(json.dumps(data))
            ls, lE = np.log(prof.s()), np.log(prof.E())
            slope = float(np.polyfit(ls, lE, 1)[0])
            panels.append({"input": path, "kind": "heat", "slope": slope,
                           "dimension": 2.0 * (1.0 - slope),
                           "series": [[float(a), float(b)] for a, b in zip(prof.s(), prof.E())]})
    text = json.dumps({"panels": panels}, indent=1) + "\n"
    artifacts = {}
    if args.out:
        _write(args.out, text, artifacts)
    else:
        sys.stdout.write(text)
    return _finish(args, f"report: {len(panels)} panels", artifacts, vars(args))


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kochflake",
                                 description="Koch-type snowflake experiments")
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                    help="worker cap; 1 is the bit-reproducibility baseline")
    ap.add_argument("--manifest", help="write an experiment manifest JSON here")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a curve or snowflake polygon")
    _add_sequence_args(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--snowflake", action="store_true")
    p.add_argument("--svg")
    p.add_argument("--json")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("carpet", help="self-affine carpet curve / domain")
    p.add_argument("--pattern", required=True, help='rows top to bottom, e.g. "0111;1000"')
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--kind", choices=["curve", "domain"], default="curve")
    p.add_argument("--svg")
    p.add_argument("--json")
    p.set_defaults(func=_cmd_carpet)

    p = sub.add_parser("tube", help="inner tube volume profile mu(eps)")
    _add_sequence_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--eps-from", type=float, required=True)
    p.add_argument("--eps-to", type=float, required=True)
    p.add_argument("--eps-per-decade", type=float, default=8)
    p.add_argument("--cache", action="store_true")
    p.add_argument("--csv")
    p.add_argument("--json")
    p.set_defaults(func=_cmd_tube)

    p = sub.add_parser("dims", help="liminf/limsup dimension proxies")
    _add_sequence_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, default=65536)
    p.add_argument("--json", nargs="?", const=True, default=False)
    p.set_defaults(func=_cmd_dims)

    p = sub.add_parser("heat", help="heat content profile E(s)")
    _add_sequence_args(p)
    p.add_argument("--level", type=int, help="fixed construction level (default: per-s)")
    p.add_argument("--method", choices=["fd", "mc"], default="fd")
    p.add_argument("--s-from", type=float, required=True)
    p.add_argument("--s-to", type=float, required=True)
    p.add_argument("--s-per-decade", type=float, default=4)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--cache", action="store_true")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=_cmd_heat)

    p = sub.add_parser("bounds", help="upper/lower bound functionals at one s")
    _add_sequence_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--json")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("gbp", help="branching-process diagnostics")
    p.add_argument("--alphabet", default="1,2")
    p.add_argument("--probs", default="0.5,0.5")
    p.add_argument("--t", type=float, default=8.0)
    p.add_argument("--seeds", type=int, default=0, help="ensemble size (0: no simulation)")
    p.add_argument("--seed", type=int, help="first seed")
    p.add_argument("--json")
    p.set_defaults(func=_cmd_gbp)

    p = sub.add_parser("selfsim", help="self-similar limit experiments")
    p.add_argument("--alphabet", default="1,2")
    p.add_argument("--probs", default="0.5,0.5")
    p.add_argument("--eps-min", type=float, default=1 / 512)
    p.add_argument("--seeds", type=int, default=8)
    p.add_argument("--seed", type=int, help="first seed")
    p.add_argument("--experiment", choices=["minkowski", "heat"], default="minkowski")
    p.add_argument("--json")
    p.set_defaults(func=_cmd_selfsim)

    p = sub.add_parser("report", help="aggregate saved profiles into plot data")
    p.add_argument("--inputs", help="comma-separated profile JSON paths")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.func(args)
    except ResourceCapError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except KochflakeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
