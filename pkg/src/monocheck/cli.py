"""Command-line front end.

Every command prints one report (a short text summary, or JSON with
``--json``) and exits with 0 (holds), 1 (refuted), 2 (inconclusive) or 64
(usage or input error).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import __version__
from .catalog import CATALOG, GENERATOR_KINDS, GeneratorSpec, generate_random, get_operator, \
    grid_from_text, sample_operator
from .checkers import DEFAULT_TOLERANCE, HOLDS, INCONCLUSIVE, REFUTED, check_global_monotone, \
    check_local_monotone, check_region_monotone, hypomonotonicity_modulus, \
    local_maximality_probe, local_radius, maximality_probe, segment_scan
from .errors import MonocheckError, PreconditionError
from .geometry import DomainBall, GraphPoint, NeighborhoodSpec, SampledGraph, Slice, as_vector
from .graphio import load_graph, save_graph
from .paths import check_local_monotone_image, component_monotonicity, default_window, \
    endpoint_extremality, load_path, univariate_global_from_local
from .varanalysis import ConeParams, check_max_monotone_via_coderivative, \
    coderivative_psd_check, default_angular_resolution, regular_normal_directions

__all__ = ["CommandOutcome", "run", "main", "emit_plot_data", "EXIT_CODES", "USAGE_ERROR"]

EXIT_CODES = {HOLDS: 0, REFUTED: 1, INCONCLUSIVE: 2}
USAGE_ERROR = 64
DEFAULT_GRID = "-1:1:0.1"
DEFAULT_SLACK = ConeParams().slack

COMMANDS = ("global", "local", "radius", "hypo", "probe", "probe-local", "segment", "cone",
            "psd", "maxmono", "path-check", "catalog", "sample", "plot")


@dataclass
class CommandOutcome:
    exit_code: int
    report: dict


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# -- argument parsing helpers ------------------------------------------------

def _vector(text: str) -> tuple[float, ...]:
    try:
        return as_vector([float(Fraction(s.strip())) for s in text.split(",")])
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _param(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected k=v, got {text!r}")
    try:
        return key.strip(), float(Fraction(value.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"parameter {key!r} needs a real value") from None


_SLICE = re.compile(r"^\s*([xy])(\d+)\s*>\s*(\S+)\s*$")


def _slice(text: str) -> tuple[str, int, float]:
    m = _SLICE.match(text)
    if not m or int(m.group(2)) < 1:
        raise argparse.ArgumentTypeError(f"expected a slice like x1>0, got {text!r}")
    try:
        return m.group(1), int(m.group(2)) - 1, float(Fraction(m.group(3)))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad slice bound in {text!r}") from None


def _domain_ball(text: str) -> DomainBall:
    center, sep, radius = text.rpartition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected CENTER:RADIUS, got {text!r}")
    try:
        r = float(Fraction(radius.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad radius in {text!r}") from None
    return DomainBall(_vector(center), r)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _nonneg_real(text: str) -> float:
    try:
        v = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}") from None
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a finite value >= 0, got {text!r}")
    return v


def _positive_real(text: str) -> float:
    v = _nonneg_real(text)
    if v == 0:
        raise argparse.ArgumentTypeError("expected a positive value")
    return v


def _common(p: argparse.ArgumentParser, graph: bool = True) -> None:
    if graph:
        src = p.add_argument_group("graph source (choose one)")
        src.add_argument("--input", metavar="FILE", help="graph file (.json or .csv)")
        src.add_argument("--catalog", metavar="NAME", help="sample a catalog operator")
        src.add_argument("--generate", metavar="KIND", choices=GENERATOR_KINDS,
                         help="random seeded graph: " + ", ".join(GENERATOR_KINDS))
        p.add_argument("--param", metavar="K=V", type=_param, action="append", default=[],
                       help="catalog or generator parameter (repeatable)")
        p.add_argument("--grid", metavar="SPEC",
                       help=f"a:b:step per axis, comma separated (default {DEFAULT_GRID})")
    p.add_argument("--tol", type=_nonneg_real, default=DEFAULT_TOLERANCE,
                   help=f"margin tolerance (default {DEFAULT_TOLERANCE:g})")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker threads for pair scans")
    p.add_argument("--seed", type=int, default=0, help="seed for --generate (default 0)")
    p.add_argument("--out", metavar="FILE", help="output file")


def _cone_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho", type=_positive_real, help="locality radius (default: 3x median NN distance)")
    p.add_argument("--slack", type=_nonneg_real, default=DEFAULT_SLACK,
                   help=f"cone slack (default {DEFAULT_SLACK:g})")
    p.add_argument("--m", type=_positive_int, help="number of sampled directions")
    p.add_argument("--no-trim", action="store_true", help="do not treat domain-box faces as edges")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="monocheck", description="Sampled monotonicity checks for set-valued operators.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("global", help="global monotonicity over all pairs")
    _common(p)

    p = sub.add_parser("local", help="monotonicity inside a neighborhood or region")
    _common(p)
    p.add_argument("--center", type=_vector, help="graph-space center x1..xn,y1..yn")
    p.add_argument("--radius", type=_positive_real, help="neighborhood radius")
    p.add_argument("--slice", type=_slice, action="append", default=[],
                   help="open half-space such as x1>0 or y2>-1 (repeatable)")
    p.add_argument("--domain-ball", type=_domain_ball, action="append", default=[],
                   help="open domain ball CENTER:RADIUS, e.g. 0,0:1/3 (repeatable)")

    p = sub.add_parser("radius", help="largest sampled radius with a monotone restriction")
    _common(p)
    p.add_argument("--center-index", type=int, required=True)

    p = sub.add_parser("hypo", help="sampled hypomonotonicity modulus")
    _common(p)
    p.add_argument("--shift", type=_nonneg_real, help="also check T + shift*I globally")

    for name, local in (("probe", False), ("probe-local", True)):
        p = sub.add_parser(name, help="look for points that extend the graph monotonically")
        _common(p)
        p.add_argument("--probe-grid", metavar="SPEC",
                       help="probe grid over the 2n graph-space axes (a:b:step each)")
        p.add_argument("--probe", type=_vector, action="append", default=[],
                       help="single probe x1..xn,y1..yn (repeatable)")
        if local:
            p.add_argument("--center", type=_vector, required=True)
            p.add_argument("--radius", type=_positive_real, required=True)

    p = sub.add_parser("segment", help="scan a domain segment of a catalog operator")
    _common(p)
    p.add_argument("--from", dest="start", type=_vector, required=True)
    p.add_argument("--to", dest="end", type=_vector, required=True)
    p.add_argument("--steps", type=_positive_int, default=100)

    for name in ("cone", "psd"):
        p = sub.add_parser(name, help="regular normal cone directions" if name == "cone"
                           else "coderivative psd test at one point")
        _common(p)
        p.add_argument("--index", type=int, required=True)
        _cone_flags(p)

    p = sub.add_parser("maxmono", help="coderivative route to maximal monotonicity")
    _common(p)
    _cone_flags(p)

    p = sub.add_parser("path-check", help="path diagnostics; with a graph also the local-to-global check")
    _common(p)
    p.add_argument("--path", metavar="FILE", required=True, help='path JSON {"knots": [...]}')
    p.add_argument("--window", type=_positive_real, help="window radius (default 3x knot spacing)")

    p = sub.add_parser("catalog", help="list catalog operators")
    _common(p, graph=False)
    p.add_argument("--name", help="show one entry")

    p = sub.add_parser("sample", help="write a sampled graph to --out")
    _common(p)
    p.add_argument("--format", choices=("json", "csv"))

    p = sub.add_parser("plot", help="write CSV plot data to --out")
    _common(p)
    return parser


# -- graph construction ------------------------------------------------------

def _graph_from_args(args, required: bool = True) -> SampledGraph | None:
    sources = [s for s in (args.input, args.catalog, args.generate) if s is not None]
    if len(sources) > 1:
        raise UsageError("give only one of --input, --catalog, --generate")
    if not sources:
        if required:
            raise UsageError("a graph source is required: --input, --catalog or --generate")
        return None
    params = dict(args.param)
    if args.input is not None:
        if params or args.grid:
            raise UsageError("--param and --grid apply to --catalog/--generate only")
        return load_graph(args.input)
    if args.generate is not None:
        return generate_random(GeneratorSpec(args.generate, args.seed, params))
    spec = get_operator(args.catalog, params)
    return sample_operator(spec, grid_from_text(args.grid or DEFAULT_GRID, spec.domain_dim))


def _source(args) -> dict:
    if getattr(args, "input", None) is not None:
        return {"input": args.input}
    if getattr(args, "generate", None) is not None:
        return {"generate": args.generate, "seed": args.seed, "params": dict(args.param)}
    if getattr(args, "catalog", None) is not None:
        return {"catalog": args.catalog, "params": dict(args.param),
                "grid": args.grid or DEFAULT_GRID}
    return {}


def _cone_params(args) -> ConeParams:
    return ConeParams(locality_radius=args.rho, slack=args.slack, angular_resolution=args.m,
                      trim_edges=not args.no_trim)


def _probe_points(args, dim: int) -> list[GraphPoint]:
    probes = []
    for v in args.probe:
        if len(v) != 2 * dim:
            raise UsageError(f"--probe needs {2 * dim} coordinates")
        probes.append(GraphPoint.from_stacked(v))
    if args.probe_grid:
        axes = grid_from_text(args.probe_grid, 2 * dim).axes
        mesh = np.meshgrid(*[np.asarray(a) for a in axes], indexing="ij")
        flat = np.stack([m.ravel() for m in mesh], axis=1)
        probes.extend(GraphPoint.from_stacked(row) for row in flat)
    if not probes:
        raise UsageError("give --probe-grid or at least one --probe")
    return probes


def _graph_point(v, dim: int, flag: str) -> GraphPoint:
    if len(v) != 2 * dim:
        raise UsageError(f"{flag} needs {2 * dim} coordinates (x1..xn,y1..yn)")
    return GraphPoint.from_stacked(v)


# -- commands ----------------------------------------------------------------

def _cmd_global(args):
    g = _graph_from_args(args)
    rep = check_global_monotone(g, args.tol, threads=args.threads)
    return rep.status, rep.to_dict(), g


def _cmd_local(args):
    g = _graph_from_args(args)
    regions = [Slice(c if kind == "x" else g.dim + c, lower) for kind, c, lower in args.slice]
    regions += args.domain_ball
    if (args.center is None) != (args.radius is None):
        raise UsageError("--center and --radius go together")
    if args.center is not None:
        if regions:
            raise UsageError("use either --center/--radius or --slice/--domain-ball")
        spec = NeighborhoodSpec(_graph_point(args.center, g.dim, "--center"), args.radius)
        rep = check_local_monotone(g, spec, args.tol, threads=args.threads)
    elif regions:
        rep = check_region_monotone(g, regions, args.tol, threads=args.threads)
    else:
        raise UsageError("local needs --center/--radius or at least one --slice/--domain-ball")
    return rep.status, rep.to_dict(), g


def _cmd_radius(args):
    g = _graph_from_args(args)
    rho = local_radius(g, args.center_index, args.tol)
    return HOLDS, {"status": HOLDS, "center_index": args.center_index,
                   "radius": None if math.isinf(rho) else rho, "unbounded": math.isinf(rho),
                   "tolerance": args.tol}, g


def _cmd_hypo(args):
    g = _graph_from_args(args)
    est = hypomonotonicity_modulus(g, args.tol)
    report = {"status": HOLDS, "modulus": est.to_dict()}
    status = HOLDS
    if args.shift is not None:
        shifted = check_global_monotone(g.shifted(args.shift), args.tol, threads=args.threads)
        status = shifted.status
        report["status"] = status
        report["shift"] = args.shift
        report["shifted_check"] = shifted.to_dict()
    return status, report, g


def _cmd_probe(args):
    g = _graph_from_args(args)
    probes = _probe_points(args, g.dim)
    if args.command == "probe-local":
        spec = NeighborhoodSpec(_graph_point(args.center, g.dim, "--center"), args.radius)
        res = local_maximality_probe(g, spec, probes, args.tol)
    else:
        res = maximality_probe(g, probes, args.tol)
    # an addable point refutes maximality; finding none proves nothing
    status = REFUTED if res.addable else INCONCLUSIVE
    return status, dict(status=status, **res.to_dict()), g


def _cmd_segment(args):
    if args.catalog is None:
        raise UsageError("segment needs --catalog")
    spec = get_operator(args.catalog, dict(args.param))
    rep = segment_scan(spec, args.start, args.end, args.steps, args.tol)
    return rep.status, rep.to_dict(), None


def _cmd_cone(args):
    g = _graph_from_args(args)
    params = _cone_params(args)
    if args.command == "cone":
        ds = regular_normal_directions(g, args.index, params)
        status = INCONCLUSIVE if ds.vacuous else HOLDS
        return status, dict(status=status, **ds.to_dict()), g
    rep = coderivative_psd_check(g, args.index, params)
    status = {"psd": HOLDS, "violated": REFUTED}.get(rep.status, INCONCLUSIVE)
    return status, rep.to_dict(), g


def _cmd_maxmono(args):
    g = _graph_from_args(args)
    rep = check_max_monotone_via_coderivative(g, _cone_params(args), args.tol)
    return rep.status, rep.to_dict(), g


def _cmd_path_check(args):
    path = load_path(args.path)
    window = default_window(path) if args.window is None else args.window
    local = check_local_monotone_image(path, window, args.tol)
    comps = component_monotonicity(path, args.tol, window)
    ends = endpoint_extremality(path, window, args.tol)
    report = {"window_radius": window, "local_image": local.to_dict(),
              "components": comps.to_dict(), "endpoints": ends.to_dict()}
    g = _graph_from_args(args, required=False)
    if g is None:
        status = local.status
    else:
        rep = univariate_global_from_local(g, path, args.tol, window)
        status = rep.status
        report["global"] = rep.to_dict()
        report["diagnostic"] = rep.detail["diagnostic"]
        if rep.detail["diagnostic"] == "THEOREM-VIOLATION":
            print("monocheck: THEOREM-VIOLATION: local image monotone but global check refuted; "
                  "the window or mesh is inadequate or there is a bug", file=sys.stderr)
    report["status"] = status
    return status, report, g


def _cmd_catalog(args):
    names = sorted(CATALOG) if args.name is None else [args.name]
    entries = []
    for name in names:
        spec = get_operator(name)
        e = CATALOG[name]
        entries.append({"name": name, "dim": spec.domain_dim, "params": dict(spec.params),
                        "local_radius": None if spec.local_radius is None
                        or math.isinf(spec.local_radius) else spec.local_radius,
                        "globally_monotone": spec.local_radius is not None
                        and math.isinf(spec.local_radius),
                        "single_valued": spec.single_valued, "summary": e.summary})
    return HOLDS, {"status": HOLDS, "operators": entries}, None


def _cmd_sample(args):
    if args.out is None:
        raise UsageError("sample needs --out")
    g = _graph_from_args(args)
    save_graph(g, args.out, args.format)
    return HOLDS, {"status": HOLDS, "points": len(g), "dim": g.dim, "out": args.out,
                   "sampling": g.sampling}, g


def _cmd_plot(args):
    if args.out is None:
        raise UsageError("plot needs --out")
    g = _graph_from_args(args)
    blocks = emit_plot_data(g, args.out)
    return HOLDS, {"status": HOLDS, "out": args.out, "blocks": blocks}, g


_DISPATCH = {
    "global": _cmd_global, "local": _cmd_local, "radius": _cmd_radius, "hypo": _cmd_hypo,
    "probe": _cmd_probe, "probe-local": _cmd_probe, "segment": _cmd_segment,
    "cone": _cmd_cone, "psd": _cmd_cone, "maxmono": _cmd_maxmono,
    "path-check": _cmd_path_check, "catalog": _cmd_catalog, "sample": _cmd_sample,
    "plot": _cmd_plot,
}


# -- plot data ---------------------------------------------------------------

def emit_plot_data(graph: SampledGraph, out) -> dict:
    """Write CSV plot data for a graph of dimension 1 or 2.

    Dimension 1 gives a single ``x,y`` block.  Dimension 2 gives the two
    planar slices of the graph in R^4: the ``x-t`` block holds ``(x1, y2)``
    for points with ``x2 = 0`` and ``y1 = 0``, the ``y-z`` block holds
    ``(x2, y1)`` for points with ``x1 = 0`` and ``y2 = 0``.  Blocks are
    separated by ``# block`` comment lines.  Returns the row count per block.
    """
    if graph.dim not in (1, 2):
        raise ValueError(f"plot data is only defined for dimension 1 or 2, got {graph.dim}")
    X, Y = graph.X, graph.Y
    if graph.dim == 1:
        blocks = {"x-y": (("x", "y"), np.column_stack([X[:, 0], Y[:, 0]]))}
    else:
        xt = (X[:, 1] == 0) & (Y[:, 0] == 0)
        yz = (X[:, 0] == 0) & (Y[:, 1] == 0)
        blocks = {"x-t": (("x", "t"), np.column_stack([X[xt, 0], Y[xt, 1]])),
                  "y-z": (("y", "z"), np.column_stack([X[yz, 1], Y[yz, 0]]))}
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for k, (name, (header, rows)) in enumerate(blocks.items()):
            if k:
                fh.write("\n")
            fh.write(f"# block {name}\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v)) for v in row])
    return {name: int(rows.shape[0]) for name, (_, rows) in blocks.items()}


# -- output ------------------------------------------------------------------

def _defaults(args) -> dict:
    d = {"tolerance": args.tol, "threads": args.threads, "seed": args.seed,
         "cone_slack": getattr(args, "slack", DEFAULT_SLACK),
         "angular_resolution": {"2": default_angular_resolution(2),
                                "4": default_angular_resolution(4)}}
    if getattr(args, "m", None) is not None:
        d["angular_resolution"] = args.m
    if getattr(args, "rho", None) is not None:
        d["locality_radius"] = args.rho
    return d


def _summary(doc: dict) -> str:
    lines = [f"{doc['command']}: {doc['status']}"]
    rep = doc["report"]
    for key in ("witness", "margin", "min_margin", "min_pair", "pairs_checked",
                "restriction_size", "radius", "diagnostic", "addable", "accepted", "value",
                "violating_direction", "points", "out"):
        if key in rep and rep[key] is not None:
            lines.append(f"  {key}: {json.dumps(rep[key])}")
    if "modulus" in rep:
        m = rep["modulus"]
        lines.append(f"  r_hat: {m['r_hat']!r}  attaining_pair: {m['attaining_pair']}")
    if "operators" in rep:
        for e in rep["operators"]:
            lines.append(f"  {e['name']:<24} dim={e['dim']}  {e['summary']}")
    detail = rep.get("detail") or {}
    for key in ("caveat", "diagnostic", "center", "modulus"):
        if key in detail:
            lines.append(f"  {key}: {json.dumps(detail[key])}")
    lines.append("  defaults: " + json.dumps(doc["defaults"], sort_keys=True))
    return "\n".join(lines)


# flags whose values may legitimately start with "-" (e.g. --grid -1:1:0.1)
_VALUE_FLAGS = {"--grid", "--center", "--from", "--to", "--probe", "--probe-grid",
                "--domain-ball", "--slice", "--param"}


def _attach_values(argv: list[str]) -> list[str]:
    out, k = [], 0
    while k < len(argv):
        tok = argv[k]
        if tok in _VALUE_FLAGS and k + 1 < len(argv) and argv[k + 1].startswith("-"):
            out.append(f"{tok}={argv[k + 1]}")
            k += 2
        else:
            out.append(tok)
            k += 1
    return out


def run(argv=None) -> CommandOutcome:
    """Parse ``argv``, run one command, print its report and return the outcome."""
    argv = _attach_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        status, report, graph = _DISPATCH[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return CommandOutcome(USAGE_ERROR, {"status": "usage-error", "error": str(exc)})
    except PreconditionError as exc:
        print(f"monocheck: precondition failed: {exc}", file=sys.stderr)
        status, report, graph = INCONCLUSIVE, {"status": INCONCLUSIVE, "reason": str(exc)}, None
    except (MonocheckError, ValueError, OSError) as exc:
        print(f"monocheck: error: {exc}", file=sys.stderr)
        return CommandOutcome(USAGE_ERROR, {"status": "usage-error", "error": str(exc)})
    except SystemExit as exc:
        # --help / --version
        return CommandOutcome(0 if not exc.code else USAGE_ERROR, {"status": "help"})

    doc = {"command": args.command, "status": status, "exit_code": EXIT_CODES[status],
           "source": _source(args), "defaults": _defaults(args), "report": report}
    if graph is not None:
        doc["graph"] = {"dim": graph.dim, "points": len(graph), "name": graph.name}
    doc = _clean(doc)
    if args.json:
        print(json.dumps(doc, indent=1, sort_keys=True, allow_nan=False))
    else:
        print(_summary(doc))
    return CommandOutcome(EXIT_CODES[status], doc)


def _clean(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def main(argv=None) -> int:
    return run(argv).exit_code


if __name__ == "__main__":
    sys.exit(main())
