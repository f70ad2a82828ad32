"""Command-line front end.

Machine-readable output goes to stdout, human-readable notes to stderr.
Exit status: 0 success, 1 domain failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .bounds import bound_report, keel_bound, reduce_spectrum
from .families import FamilyAParams, FamilyBParams, family_a_refine, family_b
from .mixed import ensemble_moments
from .optimizer import OptProblem, minimize_tau
from .state_model import (MixedEnsemble, UnitConvention, as_spectral, load_state, moments,
                          two_level)
from .survival import ZeroFinderConfig, first_orthogonal_time
from .verify import SUITES, run_suites

SWEEP_HEADER = ["alpha", "family", "param", "tau", "E", "dE", "keel_value", "keel_bound"]


class DomainError(Exception):
    pass


def _dump(obj):
    json.dump(obj, sys.stdout, indent=2, default=_json_default)
    sys.stdout.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _note(msg):
    print(msg, file=sys.stderr)


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _pure(path):
    st = load_state(path)
    if isinstance(st, MixedEnsemble):
        raise DomainError("this command needs a pure state, got a mixture")
    return as_spectral(st)


# ---------------------------------------------------------------- commands

def cmd_bounds(args):
    st = load_state(args.state)
    if isinstance(st, MixedEnsemble):
        m = ensemble_moments(st)
    else:
        st = as_spectral(st)
        m = moments(st)
    rep = bound_report(m, UnitConvention(st.h))
    _dump({"moments": m.to_dict(), "bounds": rep.to_dict()})


def cmd_tau(args):
    s = _pure(args.state)
    cfg = ZeroFinderConfig(tolerance=args.tol, horizon=args.horizon)
    _dump(first_orthogonal_time(s, cfg).to_dict())


def cmd_family(args):
    if args.p0 is not None:
        fs = family_a_refine(FamilyAParams(args.alpha, args.p0))
    else:
        fs = family_b(FamilyBParams(args.alpha, args.k, args.e1))
    _dump(fs.state.to_dict())
    _note(json.dumps(fs.summary(), indent=2))


def _sweep_alphas(lo, hi, n):
    # uniform in (alpha-1)/(alpha+1), the abscissa of the keel figure
    u = np.linspace((lo - 1) / (lo + 1), (hi - 1) / (hi + 1), n)
    return (1 + u) / (1 - u)


def _parse_params(text):
    parts = text.split(";")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("--params must look like 'p0,p0,...;k,k,...'")
    a = [float(v) for v in parts[0].split(",") if v.strip()]
    b = [int(v) for v in parts[1].split(",") if v.strip()]
    return a, b


def sweep_rows(alphas, p0s, ks):
    rows = []
    for a in alphas:
        a = float(a)
        bound = keel_bound(a)
        # reference row: the bound itself at unit mean energy
        E, dE = 1.0, a
        tau = 1.0 / (4 * min(E, dE))
        rows.append([a, "bound", 0.0, tau, E, dE, 2 * tau * (E + dE), bound])
        if math.isclose(a, 1.0, rel_tol=1e-12, abs_tol=1e-12):
            s = two_level()
            m = moments(s)
            tau = first_orthogonal_time(s).tau
            rows.append([a, "A", 0.0, tau, m.E, m.dE, 2 * tau * (m.E + m.dE), bound])
            continue
        if a < 1:
            items = [("A", p0, lambda p0=p0: family_a_refine(FamilyAParams(a, p0))) for p0 in p0s]
        else:
            items = [("B", k, lambda k=k: family_b(FamilyBParams(a, k))) for k in ks]
        for tag, param, build in items:
            try:
                fs = build()
            except ValueError as exc:
                _note(f"skip alpha={a:.6g} {tag} param={param}: {exc}")
                continue
            m = moments(fs.state)
            rows.append([a, tag, param, fs.achieved_tau, m.E, m.dE, fs.keel_value, bound])
    return rows


def write_sweep_csv(rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([_fmt(r[0]), r[1], _fmt(r[2])] + [_fmt(v) for v in r[3:]])


def cmd_sweep(args):
    p0s, ks = args.params
    if args.alphas:
        alphas = [float(v) for v in args.alphas.split(",")]
    else:
        if not 0 < args.alpha_min < args.alpha_max:
            raise DomainError("need 0 < alpha-min < alpha-max")
        alphas = _sweep_alphas(args.alpha_min, args.alpha_max, args.points)
    rows = sweep_rows(alphas, p0s, ks)
    with open(args.out, "w", newline="") as fh:
        write_sweep_csv(rows, fh)
    _note(f"wrote {len(rows)} rows to {args.out}")


def cmd_verify(args):
    names = [args.suite]
    checks = run_suites(names, samples=args.samples, seed=args.seed)
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.suite:<9} {c.name:<{width}}  {c.detail}")
    bad = sum(not c.passed for c in checks)
    _note(f"{len(checks) - bad}/{len(checks)} checks passed")
    return 0 if bad == 0 else 1


def cmd_optimize(args):
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("QSL_SEED", "0"))
    grid = tuple(float(v) for v in args.grid.split(",")) if args.grid else None
    prob = OptProblem(args.alpha, args.levels, grid=grid, cap=args.cap, seed=seed,
                      restarts=args.restarts, max_iters=args.max_iters)
    res = minimize_tau(prob)
    _dump(res.to_dict())
    if not res.converged:
        _note("no feasible point found")


def cmd_reduce(args):
    s = _pure(args.state)
    _dump(reduce_spectrum(s, args.tau).to_dict())


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsl", description="Quantum orthogonalization times and speed limits.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="moments and speed-limit bounds of a state")
    p.add_argument("--state", required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("tau", help="first orthogonalization time")
    p.add_argument("--state", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--horizon", type=float, default=None)
    p.set_defaults(func=cmd_tau)

    p = sub.add_parser("family", help="build a bound-approaching family member")
    p.add_argument("--alpha", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--p0", type=float)
    g.add_argument("--k", type=int)
    p.add_argument("--e1", type=float, default=1.0)
    p.set_defaults(func=cmd_family)

    p = sub.add_parser("sweep", help="keel-figure data as CSV")
    p.add_argument("--alpha-min", type=float, default=0.2)
    p.add_argument("--alpha-max", type=float, default=5.0)
    p.add_argument("--points", type=int, default=25)
    p.add_argument("--alphas", help="explicit comma-separated alpha list (overrides the grid)")
    p.add_argument("--params", type=_parse_params, default=_parse_params("0.05,0.01,0.002;2,8,32"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("optimize", help="numerically minimize tau at fixed alpha")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--grid", help="comma-separated fixed energy grid")
    p.add_argument("--cap", type=float, default=None)
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--max-iters", type=int, default=2000)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("reduce", help="fold and reflect a state orthogonal at tau")
    p.add_argument("--state", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.set_defaults(func=cmd_reduce)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = args.func(args)
    except (DomainError, ValueError, OSError, RuntimeError) as exc:
        _note(f"error: {exc}")
        return 1
    return rc or 0


def run(argv) -> int:
    """Entry point that turns argparse's SystemExit into a status code."""
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2


if __name__ == "__main__":
    sys.exit(main())
