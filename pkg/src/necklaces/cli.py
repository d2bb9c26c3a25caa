"""Command-line interface.

Exit codes: 0 success, 1 invalid bead or chain, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .bead import analyze_bead, bead_from_json, simple_bead
from .bounds import bound_report
from .combinatorics import TransitionFormulas
from .exceptions import NecklaceError
from .limit import (
    check_start,
    figure_profile,
    hold_coefficient,
    infer_c,
    optimal_hold,
    spec_time_scale,
    theta,
    tv_curve,
)
from .necklace import (
    build_necklace,
    distribution_csv,
    evolve,
    indicator_gallery,
    necklace_from_json,
    parse_state,
    point_mass,
    stationary,
)


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def resolve_bead(source: str):
    """``simple:p``, inline JSON, or a path to a bead JSON file."""
    if source.startswith("simple:"):
        try:
            p = float(source.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad simple bead parameter in {source!r}")
        if not 0 < p < 1:
            raise UsageError(f"simple bead parameter must lie in (0, 1), got {p}")
        return analyze_bead(simple_bead(p))
    if source.lstrip().startswith("{"):
        return analyze_bead(bead_from_json(source))
    path = Path(source)
    if not path.is_file():
        raise UsageError(f"bead file {source!r} does not exist")
    with path.open() as fh:
        return analyze_bead(bead_from_json(fh))


def _bead_label(source: str) -> str:
    return source if not source.lstrip().startswith("{") else "inline"


def resolve_chain(args, n: int | None = None):
    if getattr(args, "necklace", None):
        path = Path(args.necklace)
        if not path.is_file():
            raise UsageError(f"necklace file {args.necklace!r} does not exist")
        with path.open() as fh:
            doc = json.load(fh)

        def resolver(value):
            return resolve_bead(value) if isinstance(value, str) else analyze_bead(bead_from_json(value))

        return necklace_from_json(doc, resolver)
    if not args.bead:
        raise UsageError("--bead (or --necklace) is required")
    bead = resolve_bead(args.bead)
    if args.r:
        r = [int(x) for x in args.r.replace(" ", "").split(",") if x]
    else:
        n = n if n is not None else args.n
        if n is None:
            raise UsageError("--n is required with --pattern")
        r = indicator_gallery(args.pattern, n, args.m)
    return build_necklace(bead, r)[0]


def _time(args, spec) -> tuple[int, float]:
    if (args.c is None) == (args.t is None):
        raise UsageError("give exactly one of --c and --t")
    if args.t is not None:
        if args.t < 0:
            raise UsageError("--t must be nonnegative")
        return args.t, infer_c(spec, args.t)
    if args.c <= 0:
        raise UsageError("--c must be positive")
    return spec_time_scale(spec, args.c), args.c


def _emit(args, text: str, argv) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        meta = {
            "argv": list(argv),
            "version": __version__,
            "backend": kernels.BACKEND,
            "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        }
        Path(args.out + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_validate(args, argv) -> int:
    try:
        bead = resolve_bead(args.bead)
    except NecklaceError as exc:
        sys.stdout.write(f"{type(exc).__name__}: {exc}\n")
        return 1
    pmf = bead.pmf
    report = {
        "b": bead.b,
        "mu": bead.mu,
        "variance": bead.variance,
        "span": 1,
        "horizon": pmf.horizon,
        "eps_tail": pmf.eps_tail,
        "tail": {"n0": pmf.n0, "alpha": pmf.alpha},
        "closure_stationary": bead.pi.tolist(),
        "taboo_sums": bead.taboo.tolist(),
    }
    if args.format == "json":
        text = json.dumps(report, indent=2) + "\n"
    else:
        text = "".join(
            [
                f"b={bead.b}\n",
                f"mu={_fmt(bead.mu)}\n",
                f"variance={_fmt(bead.variance)}\n",
                "span=1\n",
                f"horizon={pmf.horizon}\n",
                f"tail_n0={pmf.n0}\n",
                f"tail_alpha={_fmt(pmf.alpha)}\n",
                "closure_stationary=" + ",".join(_fmt(x) for x in bead.pi) + "\n",
            ]
        )
    _emit(args, text, argv)
    return 0


def cmd_evolve(args, argv) -> int:
    spec = resolve_chain(args)
    t, c = _time(args, spec)
    start = parse_state(args.start)
    spec.index(start)
    dist = evolve(spec.operator, point_mass(spec, start), t)
    pi = stationary(spec)
    if args.format == "json":
        text = json.dumps(
            {
                "n": spec.n,
                "m": spec.m,
                "t": t,
                "c": c,
                "start": str(start),
                "states": [str(s) for s in spec.states],
                "probability": dist.tolist(),
                "stationary": pi.tolist(),
            }
        ) + "\n"
    else:
        text = distribution_csv(spec, dist, {"stationary": pi, "tv_contribution": 0.5 * np.abs(dist - pi)})
    _emit(args, text, argv)
    return 0


def cmd_figure(args, argv) -> int:
    spec = resolve_chain(args)
    t, _ = _time(args, spec)
    start = check_start(spec, parse_state(args.start))
    c = infer_c(spec, t)
    x, y = figure_profile(spec, t, start, args.mode)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "state_id", "position", "kind", "k", "mode", "n", "m", "bead", "t", "c"])
    run = [args.mode, spec.n, spec.m, _bead_label(args.bead or "necklace"), t, _fmt(c)]
    for idx, s in enumerate(spec.states):
        w.writerow([_fmt(x[idx]), _fmt(y[idx]), str(s), s.position, "link" if s.is_link else "interior", s.k, *run])
    if args.mode == "normalized":
        dev = float(np.max(np.abs(y - theta(c, x))))
        buf.write(f"# max_deviation={_fmt(dev)}\n")
    _emit(args, buf.getvalue(), argv)
    return 0


def _parse_list(text: str, kind=float) -> list:
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse list {text!r}")


def cmd_tv(args, argv) -> int:
    if args.c is None:
        raise UsageError("--c is required (comma-separated grid)")
    cs = _parse_list(args.c)
    if any(c <= 0 for c in cs):
        raise UsageError("c values must be positive")
    ns = _parse_list(args.n, int) if args.n else [None]
    start = parse_state(args.start)
    rows = []
    for n in ns:
        spec = resolve_chain(args, n)
        for pt in tv_curve(spec, cs, start):
            rows.append((spec.n, spec.m, pt))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m", "c", "t", "tv_exact", "tv_limit", "abs_diff", "bead", "start"])
    label = _bead_label(args.bead or "necklace")
    for n, m, pt in rows:
        w.writerow([n, m, _fmt(pt.c), pt.t, _fmt(pt.tv_exact), _fmt(pt.tv_limit), _fmt(pt.diff), label, str(start)])
    _emit(args, buf.getvalue(), argv)
    return 0


def cmd_bounds(args, argv) -> int:
    if args.n is None or int(args.n) < 5:
        raise UsageError("bounds needs --n >= 5")
    if not 0 < args.p < 1:
        raise UsageError("--p must lie in (0, 1)")
    if not 0 < args.eps < 1:
        raise UsageError("--eps must lie in (0, 1)")
    report = bound_report(int(args.n), args.p, args.eps)
    _emit(args, json.dumps(report, indent=2) + "\n", argv)
    return 0


def cmd_optimal_p(args, argv) -> int:
    ks = _parse_list(args.k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "p", "coefficient"])
    for k in ks:
        p = optimal_hold(k)
        w.writerow([_fmt(k), _fmt(p), _fmt(hold_coefficient(p, k))])
    _emit(args, buf.getvalue(), argv)
    return 0


def cmd_hot(args, argv) -> int:
    spec = resolve_chain(args)
    if args.t is None or args.t < 0:
        raise UsageError("hot needs --t >= 0")
    start = parse_state(args.start)
    table = TransitionFormulas(spec, args.t).table(start)
    values = table[args.t]
    extra = {}
    status = 0
    footer = ""
    if args.oracle:
        ref = evolve(spec.operator, point_mass(spec, start), args.t, raw=True)
        diff = np.abs(values - ref)
        extra = {"matrix_power": ref, "abs_diff": diff}
        worst = float(diff.max())
        footer = f"# max_abs_diff={_fmt(worst)}\n"
        if worst >= 1e-9:
            status = 1
    text = distribution_csv(spec, values, extra) + footer
    _emit(args, text, argv)
    return status


def _chain_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bead", help='bead source: "simple:p", inline JSON, or a JSON file')
    p.add_argument("--necklace", help="necklace JSON file (replaces --bead/--pattern/--r)")
    p.add_argument("--pattern", default="alternating", choices=["alternating", "block", "all", "fixed-count"])
    p.add_argument("--r", help="explicit indicator vector, comma-separated bits")
    p.add_argument("--m", type=int, help="bead count for --pattern fixed-count")
    p.add_argument("--start", default="s0", help='start state, e.g. "s0" or "19:1"')
    p.add_argument("--out", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="necklaces", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a bead and print its passage-time report")
    p.add_argument("--bead", required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evolve", help="exact distribution at time t")
    _chain_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--t", type=int)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("figure", help="raw / rearranged / normalized profile")
    _chain_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--t", type=int)
    p.add_argument("--mode", choices=["raw", "rearranged", "normalized"], default="normalized")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("tv", help="exact vs limiting total variation over a c grid")
    _chain_flags(p)
    p.add_argument("--n", help="comma-separated list of n")
    p.add_argument("--c", help="comma-separated grid of c")
    p.set_defaults(func=cmd_tv)

    p = sub.add_parser("bounds", help="eigenvalue, comparison and Nash bounds for the P_n family")
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("optimal-p", help="hold probability minimizing the time-scale coefficient")
    p.add_argument("--k", required=True, help="comma-separated bead fractions in (0, 1]")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimal_p)

    p = sub.add_parser("hot", help="transition probabilities from the convolution formulas")
    _chain_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--oracle", action="store_true", help="cross-check against matrix evolution")
    p.set_defaults(func=cmd_hot)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 2
    except NecklaceError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
