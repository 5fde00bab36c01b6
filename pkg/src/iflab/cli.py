"""Command-line front end: config parsing, subcommand dispatch and report emission."""

import argparse
import hashlib
import json
import logging
import math
import sys as _sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (BudgetExceeded, IflabError, NonConvergence, ParseError, ValidationError,
                     enumeration_budget)
from .pwl_core import CPLIFS, PiecewiseLinearMap, check_small, invariant_interval

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3


# --- configuration -------------------------------------------------------------------------

@dataclass
class SystemConfig:
    kind: str
    system: object
    settings: dict = field(default_factory=dict)


def _number(value, path):
    if isinstance(value, bool):
        raise ValidationError(f"{path}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            raise ValidationError(f"{path}: number must be finite")
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"{path}: cannot read {value!r} as a rational number")
    raise ValidationError(f"{path}: expected a number, got {type(value).__name__}")


def _list(doc, key, path):
    if key not in doc:
        raise ValidationError(f"{path}.{key}: missing")
    value = doc[key]
    if not isinstance(value, list):
        raise ValidationError(f"{path}.{key}: expected a list")
    return value


def parse_config(text: str) -> SystemConfig:
    """Parse a JSON system document; errors name the offending field path."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    kind = doc.get("kind")
    settings = doc.get("settings", {})
    if not isinstance(settings, dict):
        raise ValidationError("settings: expected an object")
    if kind == "cplifs":
        maps = []
        for k, entry in enumerate(_list(doc, "maps", "$")):
            path = f"maps[{k}]"
            if not isinstance(entry, dict):
                raise ValidationError(f"{path}: expected an object")
            bps = [_number(b, f"{path}.breakpoints[{i}]")
                   for i, b in enumerate(entry.get("breakpoints", []))]
            slopes = [_number(r, f"{path}.slopes[{i}]")
                      for i, r in enumerate(_list(entry, "slopes", path))]
            if "tau" not in entry:
                raise ValidationError(f"{path}.tau: missing")
            tau = _number(entry["tau"], f"{path}.tau")
            try:
                maps.append(PiecewiseLinearMap(tuple(bps), tuple(slopes), tau))
            except ValidationError as exc:
                raise ValidationError(f"{path}: {exc}")
        if not maps:
            raise ValidationError("maps: at least one map is required")
        return SystemConfig("cplifs", CPLIFS(maps), settings)
    if kind == "gdifs":
        from .gdifs import GDIFS, validate_gdifs

        q = doc.get("vertexCount")
        if not isinstance(q, int) or isinstance(q, bool) or q < 1:
            raise ValidationError("vertexCount: expected a positive integer")
        edges = []
        for e, entry in enumerate(_list(doc, "edges", "$")):
            path = f"edges[{e}]"
            if not isinstance(entry, dict):
                raise ValidationError(f"{path}: expected an object")
            ends = []
            for key in ("from", "to"):
                v = entry.get(key)
                if not isinstance(v, int) or isinstance(v, bool) or not 1 <= v <= q:
                    raise ValidationError(f"{path}.{key}: expected a vertex in 1..{q}")
                ends.append(v - 1)
            r = _number(entry.get("r"), f"{path}.r")
            t = _number(entry.get("t", 0), f"{path}.t")
            edges.append((ends[0], ends[1], r, t))
        g = GDIFS.from_edges(q, edges, validate=False)
        validate_gdifs(g)
        return SystemConfig("gdifs", g, settings)
    raise ValidationError(f"kind: expected 'cplifs' or 'gdifs', got {kind!r}")


def _emit_number(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def config_document(cfg: SystemConfig) -> dict:
    if cfg.kind == "cplifs":
        doc = {"kind": "cplifs", "maps": [
            {"breakpoints": [_emit_number(b) for b in f.breakpoints],
             "slopes": [_emit_number(r) for r in f.slopes],
             "tau": _emit_number(f.tau)} for f in cfg.system]}
    else:
        g = cfg.system
        doc = {"kind": "gdifs", "vertexCount": g.q, "edges": [
            {"from": s + 1, "to": d + 1, "r": r, "t": t} for s, d, r, t in g.edges()]}
    if cfg.settings:
        doc["settings"] = cfg.settings
    return doc


def emit_config(cfg: SystemConfig) -> str:
    return json.dumps(config_document(cfg), indent=2, sort_keys=True) + "\n"


def config_digest(cfg: SystemConfig) -> str:
    canonical = json.dumps(config_document(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --- JSON helpers --------------------------------------------------------------------------

def jsonable(obj):
    """Convert numpy values, fractions, tuples and non-finite floats into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


class _Collector(logging.Handler):
    def __init__(self):
        super().__init__(logging.WARNING)
        self.messages = []

    def emit(self, record):
        self.messages.append(record.getMessage())


# --- subcommands ---------------------------------------------------------------------------

def _need_cplifs(cfg, command):
    if cfg.kind != "cplifs":
        raise ValidationError(f"{command} needs a cplifs document")
    return cfg.system


def _cmd_validate(cfg, args):
    if cfg.kind == "gdifs":
        g = cfg.system
        return {"kind": "gdifs", "vertexCount": g.q, "edgeCount": g.n_edges, "valid": True}, \
            [("key", "value"), ("vertexCount", g.q), ("edgeCount", g.n_edges)]
    s = cfg.system
    small = check_small(s)
    I = invariant_interval(s)
    res = {"kind": "cplifs", "valid": True, "m": s.m, "typeVector": s.type_vector,
           "exact": s.is_exact(), "invariantInterval": [I.lo, I.hi],
           "small": small.small, "sumRho": small.sum_rho}
    rows = [("key", "value"), ("m", s.m), ("small", small.small), ("I_lo", I.lo), ("I_hi", I.hi)]
    return res, rows


def _cmd_dim(cfg, args):
    from .dimension import natural_dimension

    rep = natural_dimension(cfg.system, method=args.method, depth=args.depth, tol=args.tol)
    res = rep.as_dict()
    rows = [("quantity", "value")] + [(k, res[k]) for k in ("sF", "sF_direct", "alpha", "order")]
    return res, rows


def _cmd_regularity(cfg, args):
    from .regularity import regularity_order

    s = _need_cplifs(cfg, "regularity")
    rep = regularity_order(s, max_order=args.max_order, probe_depth=args.probe_depth)
    res = {"status": rep.status, "order": rep.order, "witness": rep.witness,
           "maxOrderTried": rep.max_order_tried, "offendingCounts": rep.offending_counts,
           "breakpoints": rep.breakpoint_verdicts}
    rows = [("level", "offending")] + [(n + 1, c) for n, c in enumerate(rep.offending_counts)]
    return res, rows


def _cmd_esc(cfg, args):
    from .generated import esc_scan, generate_selfsimilar

    s = _need_cplifs(cfg, "esc")
    ss = generate_selfsimilar(s)
    rep = esc_scan(ss, args.max_level, mode="rational" if args.exact else "float")
    res = {"mode": rep.mode, "perLevel": [{"level": n, "minDistance": d, "pairs": p}
                                          for n, d, p in rep.per_level],
           "zeroWitnesses": rep.zero_witnesses, "fittedC": rep.fitted_c,
           "skippedLevels": rep.skipped_levels}
    rows = [("level", "min_distance", "pairs")] + [(n, d, p) for n, d, p in rep.per_level]
    return res, rows


def _cmd_boxdim(cfg, args):
    from .dimension import box_dimension_estimate

    s = _need_cplifs(cfg, "boxdim")
    if args.scales:
        scales = [float(Fraction(x)) for x in args.scales.split(",")]
    else:
        length = float(invariant_interval(s).length) or 1.0
        scales = [length * 2.0 ** -k for k in range(4, 12)]
    est = box_dimension_estimate(s, scales)
    res = {"estimate": est.estimate, "residual": est.residual,
           "scales": est.scales, "counts": est.counts}
    rows = [("r", "count")] + list(zip(est.scales, est.counts))
    return res, rows


def _cmd_gdifs(cfg, args):
    from .gdifs import associate_gdifs, gdifs_summary
    from .regularity import regularity_order

    res = {}
    if cfg.kind == "cplifs":
        reg = regularity_order(cfg.system)
        if not reg.regular:
            from .errors import NotRegular
            raise NotRegular(f"system is {reg.status}; no associated graph-directed system")
        g, _ = associate_gdifs(cfg.system, reg.order)
        res["order"] = reg.order
    else:
        g = cfg.system
    res.update(gdifs_summary(g, depth=args.depth, seed=args.seed))
    rows = [("vertex", "p", "u", "v")]
    if "p" in res:
        rows += [(i + 1, res["p"][i], res["u"][i], res["v"][i]) for i in range(g.q)]
    return res, rows


def _cmd_scan(cfg, args):
    from .paramscan import scan_regularity, scan_to_csv

    s = _need_cplifs(cfg, "scan")
    axes = [a.strip() for a in args.axes.split(",")]
    if len(axes) != 2:
        raise ValidationError("--axes needs exactly two parameter names")
    lo, hi = (float(Fraction(x)) for x in args.range.split(","))
    scan = scan_regularity(s, axes[0], axes[1], (lo, hi), grid_size=args.grid,
                           max_order=args.max_order, probe_depth=args.probe_depth)
    res = {"axis1": scan.axis1, "axis2": scan.axis2, "range": [lo, hi], "gridSize": args.grid,
           "irregularFraction": scan.irregular_fraction,
           "undetermined": scan.undetermined_count,
           "meshCounts": [{"cellSize": c, "flagged": n} for c, n in scan.mesh_counts],
           "grid": scan.grid}
    return res, scan_to_csv(scan)


COMMANDS = {"validate": _cmd_validate, "dim": _cmd_dim, "regularity": _cmd_regularity,
            "esc": _cmd_esc, "boxdim": _cmd_boxdim, "gdifs": _cmd_gdifs, "scan": _cmd_scan}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iflab", description="Dimension and regularity tools "
                                     "for piecewise-linear iterated function systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("file", help="JSON system document ('-' for stdin)")
        p.add_argument("--json", metavar="PATH", help="write the run report as JSON")
        p.add_argument("--csv", metavar="PATH", help="write the tabular payload as CSV")
        p.add_argument("--timing", action="store_true", help="include wall time in the report")
        return p

    add("validate", "check a system document")
    p = add("dim", "natural dimension")
    p.add_argument("--method", choices=["direct", "spectral", "both"], default="both")
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--tol", type=float, default=1e-10)
    p = add("regularity", "order of regularity")
    p.add_argument("--max-order", type=int, default=None)
    p.add_argument("--probe-depth", type=int, default=40)
    p = add("esc", "exponential separation scan of the generated self-similar system")
    p.add_argument("--max-level", type=int, default=8)
    p.add_argument("--exact", action="store_true", help="rational arithmetic")
    p = add("boxdim", "box-counting estimate")
    p.add_argument("--scales", help="comma-separated decreasing mesh sizes")
    p = add("gdifs", "natural exponent, Markov measure, entropy and sandwich check")
    p.add_argument("--depth", type=int, default=6, help="sandwich enumeration depth")
    p.add_argument("--seed", type=int, default=0)
    p = add("scan", "regularity scan over a two-parameter slice")
    p.add_argument("--axes", default="b1.1,tau1")
    p.add_argument("--range", default="0,1", help="U,V: both axes span [U, V]")
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--seed", type=int, default=0, help="accepted for reproducibility; scans are deterministic")
    p.add_argument("--max-order", type=int, default=8)
    p.add_argument("--probe-depth", type=int, default=40)
    return parser


def _read(path):
    if path == "-":
        return _sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def run(command: str, cfg: SystemConfig, args) -> dict:
    """Dispatch one subcommand and return the report plus its tabular payload."""
    collector = _Collector()
    root = logging.getLogger("iflab")
    root.addHandler(collector)
    start = time.perf_counter()
    try:
        results, table = COMMANDS[command](cfg, args)
    finally:
        root.removeHandler(collector)
    report = {"command": command, "configDigest": config_digest(cfg),
              "options": {k: v for k, v in sorted(vars(args).items())
                          if k not in ("json", "csv", "timing", "command")},
              "results": results, "warnings": collector.messages}
    if getattr(args, "timing", False):
        report["timing"] = {"seconds": time.perf_counter() - start}
    return {"report": jsonable(report), "table": table}


def _csv_text(table) -> str:
    if isinstance(table, str):
        return table
    return "".join(",".join("" if v is None else str(jsonable(v)) for v in row) + "\n"
                   for row in table)


def _summary(command, results) -> str:
    keys = {"validate": ("kind", "valid", "small", "invariantInterval"),
            "dim": ("sF", "sF_direct", "alpha", "order"),
            "regularity": ("status", "order", "witness"),
            "esc": ("mode", "fittedC", "zeroWitnesses"),
            "boxdim": ("estimate", "residual"),
            "gdifs": ("alpha", "h", "chi", "h_over_chi", "sandwich"),
            "scan": ("axis1", "axis2", "irregularFraction", "undetermined", "meshCounts")}[command]
    lines = [f"{command}:"]
    for k in keys:
        if k in results:
            lines.append(f"  {k}: {results[k]}")
    if command == "esc":
        for row in results["perLevel"]:
            lines.append(f"  level {row['level']}: min distance {row['minDistance']} "
                         f"over {row['pairs']} pairs")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        enumeration_budget()
        cfg = parse_config(_read(args.file))
        out = run(args.command, cfg, args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=_sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INVALID
    except NonConvergence as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_ERROR
    except IflabError as exc:
        print(f"invalid input: {exc}", file=_sys.stderr)
        return EXIT_INVALID
    print(_summary(args.command, out["report"]["results"]))
    if args.json:
        with open(args.json, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(out["report"], fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_csv_text(out["table"]))
    return EXIT_OK


if __name__ == "__main__":
    _sys.exit(main())
