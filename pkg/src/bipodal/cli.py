"""Command-line entry point: reproducible CSV/JSON data for the transition study.

Every command writes its outputs plus a ``<command>.manifest.json`` into
``--out``.  The exit status is 0 only when every requested point succeeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import (
    E_BRACKET,
    T_WINDOW,
    N_T,
    default_t_grid,
    locate,
    locate_along_tau,
    sigma_derivative,
    sign_map,
    trace_sigma,
)
from .errors import BipodalError, SingularityError
from .export import RunManifest, write_csv
from .graphon import ConstraintPoint, graphon_to_json, symmetric_optimizer
from .perturbation import REPORT_COLUMNS, entropy_derivs
from .sampler import CROSS_COLUMNS, SamplerConfig, cross_section, sample_optimize
from .series import discriminant, s2_from_abc
from .stationarity import entropy_profile, fd_profile_derivatives, write_profile_csv

log = logging.getLogger("bipodal")

SAMPLER_FLAGS = ("M", "restarts", "budget", "refine_steps", "constraint_tol")
CROSS_HALFWIDTH = 0.0125


def _load_config(path) -> dict:
    """Flag values from a JSON object or ``key = value`` lines."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"bad config line: {raw!r}")
            data[key.strip()] = _coerce(value.strip())
    if not isinstance(data, dict):
        raise ValueError("config file must hold a mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _coerce(value: str):
    low = value.lower()
    if low in ("true", "false"):
        return low == "true"
    for kind in (int, float):
        try:
            return kind(value)
        except ValueError:
            pass
    return value


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise SystemExit(f"error: missing required option(s): {', '.join('--' + n.replace('_', '-') for n in missing)}")


def _sampler_config(args) -> SamplerConfig:
    kw = {k: getattr(args, k) for k in SAMPLER_FLAGS if getattr(args, k, None) is not None}
    return SamplerConfig(seed=args.seed, workers=args.threads, **kw)


def _add_sampler_flags(p):
    p.add_argument("--seed", type=int, help="RNG seed (required whenever the sampler runs)")
    p.add_argument("--M", type=int, help="pod count of the search space")
    p.add_argument("--restarts", type=int)
    p.add_argument("--budget", type=int, help="objective evaluations across all restarts")
    p.add_argument("--refine-steps", dest="refine_steps", type=int)
    p.add_argument("--constraint-tol", dest="constraint_tol", type=float)


# ---------------------------------------------------------------- commands


def cmd_point(args, out: Path, manifest: RunManifest) -> int:
    _require(args, "e", "tau")
    p = ConstraintPoint(args.e, args.tau)
    try:
        sym = symmetric_optimizer(p)
        rep = entropy_derivs(p)
    except SingularityError as exc:
        where = "the triple point (1/2, 1/8)" if abs(args.e - 0.5) < 1e-12 else "the Erdos-Renyi curve"
        msg = f"({args.e}, {args.tau}) is at {where}: the derivative chain degenerates ({exc})"
        manifest.failures.append(msg)
        print(f"error: {msg}", file=sys.stderr)
        return 1
    except BipodalError as exc:
        manifest.failures.append(f"({args.e}, {args.tau}): {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"symmetric optimizer: a = b = {sym.a!r}, d = {sym.d!r}, c = 1/2")
    for k in REPORT_COLUMNS:
        print(f"{k:>9} = {rep.as_row()[k]!r}")
    print(f"offset defined: {rep.offset_defined}")
    s2_abc = s2_from_abc(rep.a0, rep.d0)
    print(f"S2 via -(B^2-4AC)/4A = {s2_abc!r}  (delta {s2_abc - rep.S2:.3e})")
    print(f"discriminant B^2-4AC = {discriminant(rep.a0, rep.d0)!r}")
    row = [rep.as_row()[k] for k in REPORT_COLUMNS]
    cols = list(REPORT_COLUMNS) + ["S2_abc"]
    row.append(s2_abc)
    if not args.no_oracle:
        try:
            fd2 = float(fd_profile_derivatives(p, order=2).value)
            fd4 = float(fd_profile_derivatives(p, order=4).value)
        except BipodalError as exc:
            manifest.failures.append(f"oracle: {exc}")
            print(f"error: finite-difference oracle failed: {exc}", file=sys.stderr)
            return 1
        print(f"FD oracle S2 = {fd2!r}  (rel delta {(fd2 - rep.S2) / abs(rep.S2):.3e})")
        print(f"FD oracle S4 = {fd4!r}  (rel delta {(fd4 - rep.S4) / abs(rep.S4):.3e})")
        cols += ["S2_fd", "S4_fd"]
        row += [fd2, fd4]
    path = out / "point.csv"
    manifest.add_output(path, write_csv(path, "point v1", cols, [row]))
    return 0


def cmd_sigma(args, out: Path, manifest: RunManifest) -> int:
    grid = default_t_grid(args.t_min, args.t_max, args.n)
    trace = trace_sigma(grid, (args.e_min, args.e_max))
    pts = sigma_derivative(trace.points)
    cols = ("t", "e", "tau", "S2", "S4_at", "dS2_de", "bracket_width")
    rows = [(q.t, q.e, q.tau, q.S2, q.S4_at, q.dS2_de, q.bracket_width) for q in pts]
    path = out / "sigma.csv"
    manifest.add_output(path, write_csv(path, "sigma v1", cols, rows))
    if not trace.monotone():
        print("note: e along the traced curve is not monotone in t", file=sys.stderr)
    for t, msg in sorted(trace.failures.items()):
        manifest.failures.append(f"t={t!r}: {msg}")
        print(f"failed at t={t!r}: {msg}", file=sys.stderr)
    print(f"{len(pts)} points written to {path}")
    return 0 if not trace.failures else 1


def cmd_grid(args, out: Path, manifest: RunManifest) -> int:
    es = np.linspace(args.e_min, args.e_max, args.e_n)
    ts = np.linspace(args.t_min, args.t_max, args.t_n)
    sm = sign_map(es, ts)
    cols = ("e", "t", "S2", "S4", "sgnS2", "sgnS4", "flagged")
    path = out / "grid.csv"
    manifest.add_output(path, write_csv(path, "grid v1", cols, sm.rows()))
    flagged = int(sm.flagged.sum())
    manifest.config["flagged_cells"] = flagged
    print(f"{sm.S2.size} cells written to {path} ({flagged} flagged: degenerate or outside the unit square)")
    return 0


def cmd_cross(args, out: Path, manifest: RunManifest) -> int:
    if (args.t is None) == (args.tau is None):
        raise SystemExit("error: give exactly one of --t and --tau")
    if args.with_sampler:
        _require(args, "seed")
    if args.e_min is None or args.e_max is None:
        centre = (locate(args.t) if args.t is not None else locate_along_tau(args.tau)).e
        args.e_min = centre - CROSS_HALFWIDTH if args.e_min is None else args.e_min
        args.e_max = centre + CROSS_HALFWIDTH if args.e_max is None else args.e_max
        manifest.config.update(e_min=args.e_min, e_max=args.e_max, sigma_e=centre)
    es = np.linspace(args.e_min, args.e_max, args.e_steps)
    cfg = _sampler_config(args) if args.with_sampler else None
    rows = cross_section(es, t=args.t, tau=args.tau, cfg=cfg)
    data = []
    failed = 0
    for r in rows:
        data.append([getattr(r, k) if k != "t" else r.t for k in CROSS_COLUMNS])
        bad = math.isnan(r.solver_offset) or (cfg is not None and r.podality == 0)
        if bad:
            failed += 1
            manifest.failures.append(f"e={r.e!r}: solve failed")
            print(f"failed at e={r.e!r}", file=sys.stderr)
    path = out / "cross.csv"
    manifest.add_output(path, write_csv(path, "cross v1", CROSS_COLUMNS, data))
    print(f"{len(rows)} points written to {path}")
    return 0 if not failed else 1


def cmd_sample(args, out: Path, manifest: RunManifest) -> int:
    _require(args, "e", "tau", "seed")
    p = ConstraintPoint(args.e, args.tau)
    cfg = _sampler_config(args)
    try:
        res = sample_optimize(p, cfg, compare_bipodal=args.compare)
    except BipodalError as exc:
        manifest.failures.append(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    gpath = out / "sample.graphon.json"
    gpath.write_text(graphon_to_json(res.best) + "\n")
    summary = {
        "e": args.e,
        "tau": args.tau,
        "entropy": res.entropy,
        "podality": res.podality,
        "c_estimate": res.c_estimate,
        "constraint_residual": res.constraint_residual,
        "evaluations": res.evaluations,
        "gap_to_bipodal_solver": res.gap_to_bipodal_solver,
        "chain_best": res.chain_stats,
    }
    spath = out / "sample.summary.json"
    spath.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    manifest.add_output(gpath, 1)
    manifest.add_output(spath, 1)
    print(f"podality {res.podality}, S = {res.entropy!r}, |c - 1/2| = {res.c_estimate!r}")
    print(graphon_to_json(res.best))
    return 0


def cmd_profile(args, out: Path, manifest: RunManifest) -> int:
    _require(args, "e", "tau")
    p = ConstraintPoint(args.e, args.tau)
    cs = np.linspace(args.c_min, args.c_max, args.c_n)
    mid = int(np.argmin(np.abs(cs - 0.5)))
    # continue outward from the middle of the grid on each side
    right = entropy_profile(p, cs[mid:])
    left = entropy_profile(p, cs[:mid][::-1])
    prof = left[::-1] + right
    path = out / "profile.csv"
    write_profile_csv(path, prof, {"e": args.e, "tau": args.tau})
    manifest.add_output(path, len(prof))
    manifest.add_output(path.with_suffix(".csv.json"), 1)
    bad = [pt.c for pt in prof if not math.isfinite(pt.entropy)]
    for c in bad:
        manifest.failures.append(f"c={c!r}: no converged inner solution")
        print(f"failed at c={c!r}", file=sys.stderr)
    print(f"{len(prof)} points written to {path}")
    return 0 if not bad else 1


COMMANDS = {
    "point": cmd_point,
    "sigma": cmd_sigma,
    "grid": cmd_grid,
    "cross": cmd_cross,
    "sample": cmd_sample,
    "profile": cmd_profile,
}


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--config", type=Path, help="JSON or key=value file supplying any flag")
    common.add_argument("--threads", type=int, default=1, help="cap on worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="bipodal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("point", parents=[common], help="derivative report at one (e, tau)")
    p.add_argument("--e", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--no-oracle", action="store_true", help="skip the finite-difference check")
    subs["point"] = p

    p = sub.add_parser("sigma", parents=[common], help="trace the transition curve")
    p.add_argument("--t-min", type=float, default=T_WINDOW[0])
    p.add_argument("--t-max", type=float, default=T_WINDOW[1])
    p.add_argument("--n", type=int, default=N_T)
    p.add_argument("--e-min", type=float, default=E_BRACKET[0])
    p.add_argument("--e-max", type=float, default=E_BRACKET[1])
    subs["sigma"] = p

    p = sub.add_parser("grid", parents=[common], help="signs of S'' and S'''' on an (e, t) grid")
    p.add_argument("--e-min", type=float, default=0.51)
    p.add_argument("--e-max", type=float, default=0.75)
    p.add_argument("--e-n", type=int, default=49)
    p.add_argument("--t-min", type=float, default=T_WINDOW[0])
    p.add_argument("--t-max", type=float, default=T_WINDOW[1])
    p.add_argument("--t-n", type=int, default=45)
    subs["grid"] = p

    p = sub.add_parser("cross", parents=[common], help="|c - 1/2| along fixed t or fixed tau")
    p.add_argument("--t", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--e-min", type=float)
    p.add_argument("--e-max", type=float)
    p.add_argument("--e-steps", type=int, default=25)
    p.add_argument("--with-sampler", action="store_true")
    _add_sampler_flags(p)
    subs["cross"] = p

    p = sub.add_parser("sample", parents=[common], help="M-podal sampler at one (e, tau)")
    p.add_argument("--e", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--compare", action="store_true", help="also report the gap to the bipodal solver")
    _add_sampler_flags(p)
    subs["sample"] = p

    p = sub.add_parser("profile", parents=[common], help="S(c) profile at one (e, tau)")
    p.add_argument("--e", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--c-min", type=float, default=0.05)
    p.add_argument("--c-max", type=float, default=0.95)
    p.add_argument("--c-n", type=int, default=91)
    subs["profile"] = p
    return parser, subs


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        try:
            subs[args.command].set_defaults(**_load_config(args.config))
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read config: {exc}")
        args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.out.mkdir(parents=True, exist_ok=True)
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
    manifest = RunManifest(["bipodal", *argv], config, getattr(args, "seed", None), __version__)
    try:
        code = COMMANDS[args.command](args, args.out, manifest)
    except BipodalError as exc:
        manifest.failures.append(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        code = 1
    manifest.write(args.out / f"{args.command}.manifest.json")
    return code


if __name__ == "__main__":
    sys.exit(main())
