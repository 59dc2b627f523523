"""Command-line front end.

Subcommands: delta (one delta(p, eps)), scan (CSV delta field sweep),
inf (CSV infimum trace), uc (uniform-continuity verdict), catalog (list
or extend the function catalog), certify (oracle sandwich for one
delta).  Numbers print with 17 significant digits and identical
invocations produce byte-identical output.

Exit codes: 0 success (and EvidenceUC for uc), 2 parse errors,
3 empty sphere preimage (the nonemptiness hypothesis fails),
4 domain errors, 10 EvidenceNotUC, 11 Inconclusive.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import catalog as catalog_mod
from .delta import SearchConfig, compute_delta, epsilon_bound
from .domaintext import format_domain, parse_domain
from .errors import (
    ConstantFunction,
    DeltamaxError,
    DimensionMismatch,
    DomainParseError,
    DomainViolation,
    EmptySpherePreimage,
    InvalidDomain,
    LexError,
    NonFinite,
    ParseError,
    UnboundVariable,
    UnknownCatalogEntry,
    WindowTooSmall,
)
from .model import DomainSpec, Point, RadialFn, unwrap
from .oracle import GridSpec, grid_delta_bounds
from .uc import Verdict, default_schedule, infimum_delta, uc_verdict

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_EMPTY_PREIMAGE = 3
EXIT_DOMAIN = 4
EXIT_NOT_UC = 10
EXIT_INCONCLUSIVE = 11

_GRAMMAR_HELP = """\
expression grammar:
  operators ^ (right-assoc, binds tighter than unary minus), unary -,
  * /, + -; builtins sin cos exp ln sqrt abs min(,) max(,) pow(,);
  variables x (1-d), x1..x8 (nD), r (= ||x||, makes the function radial).
  No implicit multiplication: write 2*x, not 2x.  -x^2 means -(x^2).

domain grammar (shape:param[:flags]):
  interval:a:b [:open-left][:open-right]      bounds may be -inf/inf
  half_line:a [:open-left]
  box:lo1,lo2,..:hi1,hi2,..
  ball:center,..:radius [:closed-outer][:dim=N]
  annulus:r_in:r_out [:open-inner][:open-outer][:dim=N]
  all shapes accept :norm=l1|l2|linf (default l2)

environment:
  DELTAMAX_THREADS caps internal parallelism (default 1; results are
  deterministic regardless).
"""


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def _fmt_point(p: Point | None) -> str:
    if p is None:
        return ""
    return ";".join(_fmt(c) for c in p.coords)


def _add_common(sp: argparse.ArgumentParser, fn_required: bool = True):
    sp.add_argument("--fn", required=fn_required,
                    help="catalog name or expression source")
    sp.add_argument("--domain", help="domain text (default: the function's natural domain)")
    sp.add_argument("--dim", type=int, help="dimension for radial/nD functions")
    sp.add_argument("--tol-x", type=float, default=None, help="point tolerance")
    sp.add_argument("--tol-f", type=float, default=None, help="function-value tolerance")
    sp.add_argument("--scan-points", type=int, default=None,
                    help="bracketing samples per doubling window")
    sp.add_argument("--r0", type=float, default=None, help="initial search radius")
    sp.add_argument("--r-max", type=float, default=None,
                    help="truncation radius for unbounded domains")
    sp.add_argument("--directions", type=int, default=64,
                    help="ray count for the nD estimator")
    sp.add_argument("--seed", type=int, default=0, help="seed for direction sets")
    sp.add_argument("--out", help="write data output to this file instead of stdout")


def _config(args) -> SearchConfig:
    base = SearchConfig()
    kw = {}
    for name in ("tol_x", "tol_f", "scan_points", "r0", "r_max"):
        v = getattr(args, name)
        if v is not None:
            kw[name] = v
    return SearchConfig(**{**base.__dict__, **kw}) if kw else base


def _resolve(args):
    fn, natural = catalog_mod.resolve_function(args.fn, dim=args.dim)
    if args.domain:
        dom = parse_domain(args.domain, default_dim=args.dim)
    elif natural is not None:
        dom = natural
    else:
        g = unwrap(fn)
        if isinstance(g, RadialFn):
            dom = DomainSpec.ball((0.0,) * g.dim, math.inf)
        elif g.dimension == 1:
            dom = DomainSpec.interval(-math.inf, math.inf)
        else:
            d = g.dimension
            dom = DomainSpec.box((-math.inf,) * d, (math.inf,) * d)
    return fn, dom


def _parse_point(text: str, dim: int) -> Point:
    coords = tuple(float(v) for v in text.split(","))
    if len(coords) == 1 and dim > 1:
        # scalar shorthand for a radial position along the first axis
        coords = coords + (0.0,) * (dim - 1)
    return Point(coords)


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_delta(args) -> int:
    fn, dom = _resolve(args)
    cfg = _config(args)
    p = _parse_point(args.p, dom.dimension)
    res = compute_delta(fn, dom, p, args.eps, cfg,
                        directions=args.directions, seed=args.seed)
    lines = [
        f"value {_fmt(res.value)}",
        f"witness {_fmt_point(res.witness)}",
        f"certified_lower {_fmt(res.certified_lower)}",
        f"certified_upper {_fmt(res.certified_upper)}",
        f"backend {res.backend}",
        f"one_sided {str(res.one_sided).lower()}",
    ]
    if args.certify:
        radius = 4.0 * res.value
        per_axis = max(9, int(round(args.oracle_points ** (1.0 / dom.dimension))))
        gs = GridSpec.around(p, radius, per_axis, dim=dom.dimension)
        lo, up = grid_delta_bounds(fn, dom, p, args.eps, gs)
        slack = gs.h * math.sqrt(dom.dimension)
        ok = lo <= res.value <= up + slack
        lines += [
            f"oracle_lower {_fmt(lo)}",
            f"oracle_upper {_fmt(up)}",
            f"oracle_step {_fmt(gs.h)}",
            f"sandwich_ok {str(ok).lower()}",
        ]
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_scan(args) -> int:
    fn, dom = _resolve(args)
    cfg = _config(args)
    if args.eps_grid:
        eps_values = sorted(float(v) for v in args.eps_grid.split(","))
    else:
        eps_values = [args.eps]
    ps = np.linspace(args.p_min, args.p_max, args.p_count)
    rows = ["p,eps,delta,lower,upper,backend,error"]
    for eps in eps_values:
        for p in ps:
            pt = _parse_point(_fmt(float(p)), dom.dimension)
            try:
                res = compute_delta(fn, dom, pt, eps, cfg,
                                    directions=args.directions, seed=args.seed)
                rows.append(",".join([
                    _fmt(float(p)), _fmt(eps), _fmt(res.value),
                    _fmt(res.certified_lower), _fmt(res.certified_upper),
                    res.backend, ""]))
            except DeltamaxError as exc:
                msg = str(exc).replace(",", ";").replace("\n", " ")
                rows.append(",".join([
                    _fmt(float(p)), _fmt(eps), "nan", "nan", "nan", "", msg]))
    _emit(args, "\n".join(rows) + "\n")
    return EXIT_OK


def _trace_rows(trace) -> list[str]:
    rows = []
    for rec in trace.records:
        rows.append(",".join([
            _fmt(trace.eps), str(rec.level), format_domain(rec.window),
            str(rec.resolution), _fmt(rec.inf_delta),
            _fmt_point(rec.argmin), str(rec.skipped)]))
    return rows


def cmd_inf(args) -> int:
    fn, dom = _resolve(args)
    cfg = _config(args)
    schedule = default_schedule(dom, stages=args.stages,
                                resolution=args.resolution, cfg=cfg)
    trace = infimum_delta(fn, dom, args.eps, schedule=schedule, cfg=cfg)
    header = "eps,level,window,resolution,inf_delta,argmin,skipped"
    _emit(args, "\n".join([header] + _trace_rows(trace)) + "\n")
    return EXIT_OK


def cmd_uc(args) -> int:
    fn, dom = _resolve(args)
    cfg = _config(args)
    if args.eps_grid:
        eps_grid = [float(v) for v in args.eps_grid.split(",")]
    else:
        beta = epsilon_bound(fn, dom, cfg=cfg).beta
        eps_grid = [beta / 8.0, beta / 4.0, beta / 2.0]
        print(f"eps grid from sampled beta={_fmt(beta)} (heuristic): "
              + ",".join(_fmt(e) for e in eps_grid), file=sys.stderr)
    verdict = uc_verdict(fn, dom, eps_grid=eps_grid, cfg=cfg, count=args.count)

    lines = [f"verdict {verdict.kind.value}",
             "eps_tested " + ",".join(_fmt(e) for e in verdict.eps_tested)]
    if verdict.kind is Verdict.EVIDENCE_UC:
        lines.append(f"delta_floor {_fmt(verdict.lower_bound)}")
        lines.append("note floor is numerical evidence from sampled windows, not a proof")
    elif verdict.kind is Verdict.EVIDENCE_NOT_UC:
        w = verdict.witnesses
        lines.append(f"witness_eps {_fmt(w.eps0)}")
        lines.append("witness_pairs x | y | distance")
        for (x, y), d in zip(w.pairs, w.distances):
            lines.append(f"  {_fmt_point(x)} | {_fmt_point(y)} | {_fmt(d)}")
        lines.append("note distances halve while |f(x)-f(y)| stays at eps; "
                     "evidence, not a proof")
    else:
        lines.append(f"reason {verdict.reason}")
    _emit(args, "\n".join(lines) + "\n")

    if args.trace:
        header = "eps,level,window,resolution,inf_delta,argmin,skipped"
        rows = [header]
        for trace in verdict.traces:
            rows.extend(_trace_rows(trace))
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("\n".join(rows) + "\n")

    if verdict.kind is Verdict.EVIDENCE_NOT_UC:
        return EXIT_NOT_UC
    if verdict.kind is Verdict.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_catalog(args) -> int:
    if args.load:
        with open(args.load, "r", encoding="utf-8") as fh:
            catalog_mod.load_manifest(fh.read())
    entries = [catalog_mod.catalog_lookup(name) for name in catalog_mod.catalog_names()]
    _emit(args, catalog_mod.serialize_manifest(entries))
    return EXIT_OK


def cmd_certify(args) -> int:
    fn, dom = _resolve(args)
    cfg = _config(args)
    p = _parse_point(args.p, dom.dimension)
    res = compute_delta(fn, dom, p, args.eps, cfg,
                        directions=args.directions, seed=args.seed)
    radius = args.window_radius if args.window_radius else 4.0 * res.value
    h = args.h if args.h else 2.0 * radius / 4096.0
    window_lo = p.as_array() - radius
    window_hi = p.as_array() + radius
    gs = GridSpec(h=h, window=DomainSpec.box(window_lo, window_hi, norm=dom.norm))
    lo, up = grid_delta_bounds(fn, dom, p, args.eps, gs,
                               require_radius=args.window_radius)
    slack = h * math.sqrt(dom.dimension)
    ok = lo <= res.value <= up + slack
    _emit(args, "\n".join([
        f"value {_fmt(res.value)}",
        f"backend {res.backend}",
        f"oracle_lower {_fmt(lo)}",
        f"oracle_upper {_fmt(up)}",
        f"oracle_step {_fmt(h)}",
        f"grid_slack {_fmt(slack)}",
        f"sandwich_ok {str(ok).lower()}",
    ]) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="deltamax",
        description="Greatest delta-epsilon numbers and uniform-continuity evidence.",
        epilog=_GRAMMAR_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("delta", help="compute one delta(p, eps)")
    _add_common(sp)
    sp.add_argument("--p", required=True, help="point (comma-separated coordinates)")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--certify", action="store_true",
                    help="also run the brute-force oracle sandwich")
    sp.add_argument("--oracle-points", type=int, default=100001,
                    help="total oracle grid points for --certify")
    sp.set_defaults(func=cmd_delta)

    sp = sub.add_parser("scan", help="CSV sweep of the delta field")
    _add_common(sp)
    sp.add_argument("--p-min", type=float, required=True)
    sp.add_argument("--p-max", type=float, required=True)
    sp.add_argument("--p-count", type=int, required=True)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--eps-grid", help="comma-separated eps values")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("inf", help="CSV infimum trace of delta(., eps)")
    _add_common(sp)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--stages", type=int, default=21)
    sp.add_argument("--resolution", type=int, default=2048)
    sp.set_defaults(func=cmd_inf)

    sp = sub.add_parser("uc", help="uniform-continuity verdict")
    _add_common(sp)
    sp.add_argument("--eps-grid", help="comma-separated eps values "
                                       "(default: beta/8, beta/4, beta/2)")
    sp.add_argument("--count", type=int, default=8,
                    help="witness pairs required for EvidenceNotUC")
    sp.add_argument("--trace", help="write the infimum traces to this CSV file")
    sp.set_defaults(func=cmd_uc)

    sp = sub.add_parser("catalog", help="list the function catalog as a manifest")
    _add_common(sp, fn_required=False)
    sp.add_argument("--load", help="register entries from a manifest file first")
    sp.set_defaults(func=cmd_catalog)

    sp = sub.add_parser("certify", help="oracle sandwich around one delta")
    _add_common(sp)
    sp.add_argument("--p", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--h", type=float, help="oracle grid step")
    sp.add_argument("--window-radius", type=float,
                    help="oracle window radius (default 4x the estimate)")
    sp.set_defaults(func=cmd_certify)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching the parse-error code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (LexError, ParseError) as exc:
        print(f"error: {exc.position}: {exc.args[0].split(': ', 1)[-1]}",
              file=sys.stderr)
        return EXIT_PARSE
    except (DomainParseError, UnknownCatalogEntry, UnboundVariable) as exc:
        print(f"error: 0: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (EmptySpherePreimage, ConstantFunction) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_PREIMAGE
    except (DomainViolation, InvalidDomain, DimensionMismatch, NonFinite,
            WindowTooSmall) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
