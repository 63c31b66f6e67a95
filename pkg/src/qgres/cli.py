"""qgres command line.

Exit status: 0 success (verdict true), 1 verdict false, 2 usage or input
error, 3 numerical failure.  Set QGRES_THREADS to cap BLAS threads.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds, bs, generators, trace
from .finder import FinderError, Rectangle, locate_in_strip, locate_resonances
from .graph import GraphClassParams, GraphError, ParameterError, validate
from .graph_io import read_graph, serialize_graph
from .quadrature import QuadratureError
from .secular import DomainError

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

LINE_HELP = (
    "y1 defaults to Y - ln(16)/Lmin and y2 to ln(32)/Lmin, each pulled in to "
    "0.75/sqrt(a) from the strip when that is closer (sharp Gaussians lose "
    "digits to cancellation on distant lines)"
)


class UsageError(Exception):
    pass


def _positive(kind):
    def conv(s):
        v = kind(s)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v

    return conv


def _sizes(s: str) -> list[int]:
    try:
        out = [int(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"comma-separated integers expected, got {s!r}") from None
    if not out or any(n <= 0 for n in out) or any(b <= a for a, b in zip(out, out[1:])):
        raise argparse.ArgumentTypeError("sizes must be positive and increasing")
    return out


def _add_class(p, required=False):
    g = p.add_argument_group("graph class (declared, not inferred)")
    g.add_argument("--D", type=_positive(int), required=required, help="maximal degree")
    g.add_argument("--n0", type=int, required=required, help="maximal number of leads")
    g.add_argument("--lmin", type=_positive(float), required=required, help="minimal edge length")
    g.add_argument("--lmax", type=_positive(float), required=required, help="maximal edge length")


def _class_from(args, graph=None) -> GraphClassParams | None:
    vals = (args.D, args.n0, args.lmin, args.lmax)
    if all(v is None for v in vals):
        return None
    if any(v is None for v in vals):
        raise UsageError("--D, --n0, --lmin and --lmax must be given together")
    return GraphClassParams(args.D, args.n0, args.lmin, args.lmax)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qgres", description="Resonances of open quantum graphs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a graph file and class membership",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("graph", help="graph file")
    p.add_argument("--unbalanced", action="store_true", help="also require leads != degree at every vertex")
    _add_class(p)

    p = sub.add_parser("resonances", help="locate resonances in a strip window",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("graph", help="graph file")
    p.add_argument("--xmin", type=float, required=True, help="left end of the real-part window")
    p.add_argument("--xmax", type=float, required=True, help="right end of the real-part window")
    p.add_argument("--ymin", type=float, default=None, help="bottom of the search box (default Y - 0.25)")
    p.add_argument("--ymax", type=float, default=None, help="top of the search box (default 0.25)")
    p.add_argument("--tol", type=_positive(float), default=1e-10, help="resonance location tolerance")
    p.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    _add_class(p)

    p = sub.add_parser("trace-check", help="compare both sides of the trace formula",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter, epilog=LINE_HELP)
    p.add_argument("graph", help="graph file")
    p.add_argument("--a", type=_positive(float), default=1.0, help="Gaussian width parameter")
    p.add_argument("--x0", type=float, default=0.0, help="real part of the Gaussian centre")
    p.add_argument("--y-anchor", type=float, default=0.0, help="imaginary part of the Gaussian centre")
    p.add_argument("--y1", type=float, default=None, help="bottom line (below Y)")
    p.add_argument("--y2", type=float, default=None, help="top line (above 0)")
    p.add_argument("--tol", type=_positive(float), default=1e-6, help="relative residual tolerance")
    p.add_argument("--samples", default=None, help="write integrand samples x,re,im on the bottom line here")
    p.add_argument("--out", default=None, help="output path (stdout if omitted)")
    _add_class(p)

    p = sub.add_parser("weyl", help="fit the counting function N(R) against R",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("graph", help="graph file")
    p.add_argument("--rmin", type=_positive(float), default=10.0, help="smallest R")
    p.add_argument("--rmax", type=_positive(float), default=100.0, help="largest R")
    p.add_argument("--count", type=_positive(int), default=91, help="number of R values")
    p.add_argument("--slope-tol", type=_positive(float), default=0.02, help="relative slope tolerance")
    p.add_argument("--format", choices=("text", "csv"), default="text", help="output format")
    p.add_argument("--out", default=None, help="output path (stdout if omitted)")
    _add_class(p)

    p = sub.add_parser("lower-bound", help="certify the resonance-count lower bound",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                       epilog="y1 = Y - ln(16)/Lmin, y2 = ln(32)/Lmin, a = ln2/(2 ln32/Lmin - Y)^2")
    p.add_argument("graph", help="graph file")
    p.add_argument("--x0", type=float, default=0.0, help="centre of the counting window")
    p.add_argument("--tol", type=_positive(float), default=1e-8, help="resonance location tolerance")
    p.add_argument("--format", choices=("text", "json"), default="text", help="output format")
    p.add_argument("--out", default=None, help="output path (stdout if omitted)")
    _add_class(p, required=True)

    p = sub.add_parser("bs", help="spectral-measure convergence along a graph family",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter, epilog=LINE_HELP)
    p.add_argument("--family", choices=("cycle", "path"), default="cycle", help="graph family")
    p.add_argument("--sizes", type=_sizes, default=[4, 8, 16, 32, 64],
                   help="comma-separated increasing sizes")
    p.add_argument("--leads", type=int, default=1, help="leads per vertex (path ends get one more)")
    p.add_argument("--length", type=_positive(float), default=1.0, help="edge length")
    p.add_argument("--a", type=_positive(float), default=6.0, help="Gaussian width parameter")
    p.add_argument("--x0", type=float, default=0.3, help="real part of the Gaussian centre")
    p.add_argument("--y-anchor", type=float, default=None, help="default: middle of the strip, Y/2")
    p.add_argument("--threshold", type=_positive(float), default=1e-3, help="bound on the final difference")
    p.add_argument("--out", default=None, help="experiment table CSV")
    p.add_argument("--lambda-out", default=None, help="line-density estimate CSV x,y,re,im")
    p.add_argument("--lambda-y", type=float, default=0.5, help="line for the density estimate")
    p.add_argument("--xgrid", default="-3,3,61", help="lo,hi,count for the density estimate")

    p = sub.add_parser("generate", help="write a graph from one of the built-in families",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--family", choices=generators.FAMILIES, required=True, help="graph family")
    p.add_argument("--size", type=_positive(int), required=True, help="number of vertices")
    p.add_argument("--leads", type=int, default=None, help="leads per vertex (family default if omitted)")
    p.add_argument("--length", type=_positive(float), default=1.0, help="edge length")
    p.add_argument("--length-max", type=_positive(float), default=None,
                   help="draw lengths uniformly from [length, length-max]")
    p.add_argument("--degree", type=_positive(int), default=3, help="degree for random regular graphs")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--out", default=None, help="output path (stdout if omitted)")
    return ap


def _cmd_validate(args) -> int:
    graph = read_graph(args.graph)
    params = _class_from(args)
    rep = validate(graph, params or GraphClassParams.of(graph), require_unbalanced=args.unbalanced)
    lines = [f"vertices = {len(graph.vertices)}", f"edges = {len(graph.edges)}",
             f"total_length = {graph.total_length!r}", f"in_class = {rep.in_class}",
             f"unbalanced = {rep.unbalanced}"]
    lines += [f"violation = {v}" for v in rep.violations]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_FALSE if rep.violations else EXIT_OK


def _cmd_resonances(args) -> int:
    graph = read_graph(args.graph)
    params = _class_from(args) or GraphClassParams.of(graph)
    if args.xmax <= args.xmin:
        raise UsageError("--xmax must exceed --xmin")
    if args.ymin is None and args.ymax is None:
        res = locate_in_strip(graph, args.xmin, args.xmax, tol=args.tol, params=params)
    else:
        Y = bounds.strip_depth(params)
        ylo = Y - 0.25 if args.ymin is None else args.ymin
        yhi = 0.25 if args.ymax is None else args.ymax
        res = locate_resonances(graph, Rectangle(args.xmin, args.xmax, ylo, yhi), tol=args.tol)
    _emit(res.to_csv(), args.out)
    return EXIT_OK


def _cmd_trace(args) -> int:
    graph = read_graph(args.graph)
    params = _class_from(args)
    g = trace.GaussianTest(args.a, args.x0, args.y_anchor)
    rep = trace.trace_check(graph, g, args.y1, args.y2, tol=args.tol, params=params)
    if args.samples:
        xs = np.linspace(g.x0 - rep.T, g.x0 + rep.T, 801)
        _emit(trace.integrand_samples_csv(graph, g, xs, rep.y1), args.samples)
    _emit(rep.to_text(), args.out)
    return EXIT_OK if rep.passed else EXIT_FALSE


def _cmd_weyl(args) -> int:
    graph = read_graph(args.graph)
    params = _class_from(args)
    if args.rmax <= args.rmin:
        raise UsageError("--rmax must exceed --rmin")
    fit = trace.weyl_fit(graph, np.linspace(args.rmin, args.rmax, args.count), params)
    ok = fit.relative_error <= args.slope_tol
    if args.format == "csv":
        text = "R,count\n" + "".join(f"{r:.17g},{n}\n" for r, n in zip(fit.R, fit.counts))
    else:
        text = (f"slope = {fit.slope:.17g}\nexpected_slope = {fit.expected_slope:.17g}\n"
                f"relative_error = {fit.relative_error:.17g}\nintercept = {fit.intercept:.17g}\n"
                f"max_deviation = {fit.intercept_band:.17g}\npassed = {ok}\n")
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_FALSE


def _cmd_lower_bound(args) -> int:
    graph = read_graph(args.graph)
    params = _class_from(args)
    cert = bounds.verify_lower_bound(graph, params, args.x0, tol=args.tol, require_class=False)
    if not cert.in_class:
        print("warning: graph is not an unbalanced member of the declared class; "
              "the count is reported but carries no guarantee", file=sys.stderr)
    text = json.dumps(cert.as_dict(), indent=2, sort_keys=True) + "\n" if args.format == "json" else cert.to_text()
    _emit(text, args.out)
    return EXIT_OK if (cert.verdict and cert.in_class) else EXIT_FALSE


def _cmd_bs(args) -> int:
    if args.family == "cycle":
        family = bs.cycle_family(args.leads, args.length)
    else:
        family = bs.path_family(args.leads, args.leads + 1, args.length)
    params = GraphClassParams.of(family(args.sizes[0]))
    g = bs.mid_strip_gaussian(params, args.a, args.x0)
    if args.y_anchor is not None:
        g = trace.GaussianTest(args.a, args.x0, args.y_anchor)
    table = bs.convergence_experiment(family, args.sizes, g)
    _emit(table.to_csv(), args.out)
    if args.lambda_out:
        try:
            lo, hi, n = args.xgrid.split(",")
            xs = np.linspace(float(lo), float(hi), int(n))
        except ValueError:
            raise UsageError(f"--xgrid expects lo,hi,count, got {args.xgrid!r}") from None
        est = bs.lambda_experiment(family, args.sizes, xs, args.lambda_y)
        _emit(est.to_csv(), args.lambda_out)
        print(f"lambda_cauchy_error = {est.cauchy_error:.17g}", file=sys.stderr)
    for r in table.rows:
        if r.error:
            print(f"size {r.size}: {r.error}", file=sys.stderr)
    ok = table.verdict(args.threshold)
    print(f"verdict = {ok}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FALSE


def _cmd_generate(args) -> int:
    length = args.length if args.length_max is None else (args.length, args.length_max)
    graph = generators.generate(args.family, args.size, leads=args.leads, length=length,
                                seed=args.seed, degree=args.degree)
    _emit(serialize_graph(graph), args.out)
    return EXIT_OK


COMMANDS = {
    "validate": _cmd_validate, "resonances": _cmd_resonances, "trace-check": _cmd_trace,
    "weyl": _cmd_weyl, "lower-bound": _cmd_lower_bound, "bs": _cmd_bs, "generate": _cmd_generate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, GraphError, ParameterError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FinderError, QuadratureError, trace.TruncationError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
