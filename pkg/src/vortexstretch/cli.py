"""Command-line front end.

Exit codes: 0 success, 1 usage error (including malformed field
expressions), 2 domain or numerical error, 3 a ``verify`` suite failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys

import numpy as np

from . import __version__
from .analyze import (
    SUITES,
    classify_grid,
    compare_paths,
    run_suite,
)
from .diffgeo import TolerancePolicy, frenet_sample
from .errors import ParseError, PreconditionError, VortexError
from .fieldkit import catalog, eval_jet, eval_jet_fd, load_field_file, parse_field
from .flowsim import IntegratorConfig, cauchy_vorticity, disk_probe, flow_map, integrate_streamline

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


_NUMBER = r"(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?"


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let "--point -1,2,0" through as a value rather than an option
        self._negative_number_matcher = re.compile(rf"^-{_NUMBER}(,[-+]?{_NUMBER})*$")

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


# ---------------------------------------------------------------------------
# formatting


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v) + 0.0:.17g}"  # + 0.0 folds -0 into 0


def to_json(obj, indent: int = 0) -> str:
    """JSON with every float at 17 significant digits; non-finite -> null."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return f"{float(obj) + 0.0:.17g}" if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument helpers


def parse_floats(text: str, n: int | None = None, what: str = "value") -> list[float]:
    try:
        vals = [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"cannot parse {what} {text!r} as comma-separated numbers") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{what} needs {n} numbers, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what} must be finite")
    return vals


def _field_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("field")
    g.add_argument("--catalog", metavar="NAME", help="built-in field name")
    g.add_argument("--params", metavar="A,B,...", help="catalog parameters")
    g.add_argument("--expr", metavar="TEXT", help="three component expressions, e.g. '-x, y, 0'")
    g.add_argument("--field-file", metavar="PATH", help="file holding component expressions")
    g.add_argument("--pressure", metavar="EXPR", help="known pressure for --expr fields")


def _output_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("output")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--out", metavar="PATH", help="write to PATH instead of standard output")
    g.add_argument("--no-header", action="store_true", help="omit the metadata header line")


def _tol_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("tolerances")
    d = TolerancePolicy()
    g.add_argument("--eps-stagnation", type=float, default=d.eps_stagnation)
    g.add_argument("--eps-kappa", type=float, default=d.eps_kappa)
    g.add_argument("--abs-tol", type=float, default=d.abs_tol)
    g.add_argument("--rel-tol", type=float, default=d.rel_tol)


def _integrator_args(p: argparse.ArgumentParser, t_end: float = 1.0):
    g = p.add_argument_group("integrator")
    d = IntegratorConfig()
    g.add_argument("--t-end", type=float, default=t_end)
    g.add_argument("--samples", type=int, default=d.samples)
    g.add_argument("--rtol", type=float, default=d.rel_tol)
    g.add_argument("--atol", type=float, default=d.abs_tol)
    g.add_argument("--max-step", type=float, default=d.max_step)
    g.add_argument("--backward", action="store_true", help="integrate along -u")


def build_field(args):
    sources = [s for s in (args.catalog, args.expr, args.field_file) if s is not None]
    if len(sources) != 1:
        raise UsageError("give exactly one of --catalog, --expr, --field-file")
    if args.catalog is not None:
        params = parse_floats(args.params, what="--params") if args.params else None
        return catalog(args.catalog, params)
    if args.params:
        raise UsageError("--params only applies to --catalog")
    if args.expr is not None:
        return parse_field(args.expr, pressure=args.pressure)
    if args.pressure is not None:
        raise UsageError("--pressure only applies to --expr (put 'p: ...' in the field file)")
    try:
        return load_field_file(args.field_file)
    except OSError as exc:
        raise UsageError(f"cannot read field file: {exc}") from None


def build_tol(args) -> TolerancePolicy:
    return TolerancePolicy(
        eps_stagnation=args.eps_stagnation,
        eps_kappa=args.eps_kappa,
        abs_tol=args.abs_tol,
        rel_tol=args.rel_tol,
    )


def build_cfg(args) -> IntegratorConfig:
    return IntegratorConfig(
        rel_tol=args.rtol,
        abs_tol=args.atol,
        max_step=args.max_step,
        t_span=args.t_end,
        samples=args.samples,
        backward=args.backward,
    )


# ---------------------------------------------------------------------------
# subcommands; each returns (payload for json, (columns, rows) for csv, exit code)


def _frenet_row(s) -> dict:
    row = {"x": s.x[0], "y": s.x[1], "z_pos": s.x[2]}
    row.update(
        speed=s.speed,
        kappa=s.kappa,
        alpha=s.alpha,
        F=s.F,
        S=s.S,
        dz_kappa=s.dz_kappa,
        torsion=s.torsion,
        curvature_degenerate=s.curvature_degenerate,
    )
    return row


def cmd_eval(args):
    field = build_field(args)
    point = parse_floats(args.point, 3, "--point")
    s = frenet_sample(field, point, build_tol(args))
    payload = {"field": field.descriptor, **s.as_dict()}
    cols = ["x", "y", "z_pos", "speed", "kappa", "alpha", "F", "S", "dz_kappa", "torsion", "curvature_degenerate"]
    return payload, (cols, [_frenet_row(s)]), EXIT_OK


STREAMLINE_COLUMNS = ["t", "z", "x", "y", "z_pos", "speed", "kappa", "alpha", "F", "S"]


def cmd_streamline(args):
    field = build_field(args)
    tol = build_tol(args)
    cfg = build_cfg(args)
    seed = parse_floats(args.point, 3, "--point")
    line = integrate_streamline(field, seed, cfg, tol)
    oriented = field.negated() if cfg.backward else field
    rows = []
    for t, z, x in zip(line.t, line.z, line.x):
        s = frenet_sample(oriented, x, tol)
        rows.append(
            {"t": t, "z": z, "x": x[0], "y": x[1], "z_pos": x[2], "speed": s.speed,
             "kappa": s.kappa, "alpha": s.alpha, "F": s.F, "S": s.S}
        )
    payload = {
        "field": field.descriptor,
        "seed": line.seed,
        "status": line.status,
        "stats": {
            "steps": line.stats.steps,
            "rejected": line.stats.rejected,
            "max_error": line.stats.max_error,
        },
        "samples": rows,
    }
    return payload, (STREAMLINE_COLUMNS, rows), EXIT_OK


CLASSIFY_COLUMNS = ["x", "y", "z_pos", "alpha", "S", "dz_kappa", "kappa", "verdict"]


def cmd_classify(args):
    field = build_field(args)
    b = parse_floats(args.box, 6, "--box")
    box = [b[0:2], b[2:4], b[4:6]]
    res = parse_floats(args.resolution, 3, "--resolution")
    if not all(r == int(r) for r in res):
        raise UsageError("--resolution needs integers")
    report = classify_grid(field, box, [int(r) for r in res], build_tol(args), args.workers)
    payload = report.as_dict()
    rows = []
    for p in payload["points"]:
        rows.append({"x": p["x"][0], "y": p["x"][1], "z_pos": p["x"][2], **{k: p[k] for k in CLASSIFY_COLUMNS[3:]}})
    for row in rows:
        for k in ("alpha", "S", "dz_kappa", "kappa"):
            if row[k] is not None and not math.isfinite(row[k]):
                row[k] = None
    return payload, (CLASSIFY_COLUMNS, rows), EXIT_OK


DISK_COLUMNS = ["t", "defect_n", "defect_b", "axis_stretch"]


def cmd_probe_disk(args):
    field = build_field(args)
    seed = parse_floats(args.point, 3, "--point")
    res = disk_probe(field, seed, build_cfg(args), build_tol(args), ring_radius=args.ring_radius)
    cols = list(DISK_COLUMNS)
    rows = [
        {"t": t, "defect_n": dn, "defect_b": db, "axis_stretch": st}
        for t, dn, db, st in zip(res.t, res.defect_n, res.defect_b, res.axis_stretch)
    ]
    if res.ring_radius is not None:
        cols += ["ring_defect_n", "ring_defect_b"]
        for row, rn, rb in zip(rows, res.ring_defect_n, res.ring_defect_b):
            row.update(ring_defect_n=rn, ring_defect_b=rb)
    payload = {
        "field": field.descriptor,
        "seed": res.seed,
        "basis": {"n0": res.basis[0], "b0": res.basis[1]},
        "ring_radius": res.ring_radius,
        "max_defect": res.max_defect(),
        "series": rows,
    }
    return payload, (cols, rows), EXIT_OK


def cmd_probe_cauchy(args):
    field = build_field(args)
    seed = parse_floats(args.point, 3, "--point")
    omega0 = parse_floats(args.omega0, 3, "--omega0")
    cfg = build_cfg(args)
    t = args.t if args.t is not None else cfg.t_span
    if t == 0:
        omega = np.asarray(omega0)
        x = np.asarray(seed)
    else:
        omega = cauchy_vorticity(field, seed, omega0, t, cfg, build_tol(args))
        x = flow_map(field.negated() if cfg.backward else field, seed, [t], cfg)[0].x
    row = {"t": t, "x": x[0], "y": x[1], "z_pos": x[2],
           "omega_x": omega[0], "omega_y": omega[1], "omega_z": omega[2]}
    payload = {"field": field.descriptor, "seed": seed, "omega0": omega0, "t": t,
               "position": x, "omega": omega}
    return payload, (list(row), [row]), EXIT_OK


COMPARE_COLUMNS = ["x", "y", "z_pos", "S_analytic", "S_fd", "S_trajectory", "max_dev", "pass"]


def cmd_compare(args):
    field = build_field(args)
    if not args.point:
        raise UsageError("compare needs at least one --point")
    points = [parse_floats(p, 3, "--point") for p in args.point]
    results = compare_paths(field, points, args.tol, build_tol(args))
    rows, records = [], []
    for r in results:
        dev = max(c.abs_dev for c in r["comparisons"])
        rows.append({"x": r["x"][0], "y": r["x"][1], "z_pos": r["x"][2], "S_analytic": r["S_analytic"],
                     "S_fd": r["S_fd"], "S_trajectory": r["S_trajectory"], "max_dev": dev, "pass": r["pass"]})
        records.append({**{k: v for k, v in r.items() if k != "comparisons"},
                        "comparisons": [c.as_dict() for c in r["comparisons"]]})
    ok = all(r["pass"] for r in results)
    return {"field": field.descriptor, "tol": args.tol, "points": records, "pass": ok}, (COMPARE_COLUMNS, rows), EXIT_OK


VERIFY_COLUMNS = ["suite", "label", "params", "computed", "oracle", "abs_dev", "tol", "pass"]


def cmd_verify(args):
    names = args.suite or ["all"]
    if "all" in names:
        names = list(SUITES)
    for n in names:
        if n not in SUITES:
            raise UsageError(f"unknown suite {n!r} (choose from {', '.join(SUITES)}, all)")
    results = [run_suite(n) for n in names]
    rows = []
    for r in results:
        for c in r.comparisons:
            rows.append({"suite": r.name, "label": c.label, "params": " ".join(fmt(p) for p in c.params),
                         "computed": c.computed, "oracle": c.oracle, "abs_dev": c.abs_dev, "tol": c.tol,
                         "pass": c.passed})
    code = EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: {len(r.comparisons)} checks, max abs deviation {r.max_abs_dev():.3g}",
              file=sys.stderr)
    payload = {"suites": [r.as_dict() for r in results], "pass": code == EXIT_OK}
    return payload, (VERIFY_COLUMNS, rows), code


def cmd_field_check(args):
    field = build_field(args)
    rng = np.random.default_rng(args.seed)
    b = parse_floats(args.box, 2, "--box")
    rows = []
    max_g = max_h = 0.0
    tried = 0
    while len(rows) < args.points and tried < 50 * args.points:
        tried += 1
        p = rng.uniform(b[0], b[1], 3)
        try:
            ad = eval_jet(field, p)
            fd = eval_jet_fd(field, p)
        except VortexError:
            continue
        dg = float(np.abs(ad.grad_u - fd.grad_u).max()) / max(float(np.abs(ad.grad_u).max()), 1.0)
        dh = float(np.abs(ad.hess_u - fd.hess_u).max()) / max(float(np.abs(ad.hess_u).max()), 1.0)
        max_g, max_h = max(max_g, dg), max(max_h, dh)
        rows.append({"x": p[0], "y": p[1], "z_pos": p[2], "grad_rel_dev": dg, "hess_rel_dev": dh,
                     "divergence": float(np.trace(ad.grad_u))})
    if not rows:
        raise PreconditionError("no sample point inside the field's domain")
    ok = max_g <= args.grad_tol and max_h <= args.hess_tol
    payload = {"field": field.descriptor, "divergence_free": field.divergence_free, "points": len(rows),
               "max_grad_rel_dev": max_g, "max_hess_rel_dev": max_h, "pass": ok, "samples": rows}
    cols = ["x", "y", "z_pos", "grad_rel_dev", "hess_rel_dev", "divergence"]
    return payload, (cols, rows), EXIT_OK if ok else EXIT_NUMERIC


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vortexstretch", description="Stable vortex-stretching criterion along streamlines.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    p = sub.add_parser("eval", help="Frenet data and criterion at a point")
    _field_args(p); _tol_args(p); _output_args(p)  # noqa: E702
    p.add_argument("--point", required=True, metavar="X,Y,Z")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("streamline", help="integrate a streamline with arc length")
    _field_args(p); _tol_args(p); _integrator_args(p); _output_args(p)  # noqa: E702
    p.add_argument("--point", required=True, metavar="X,Y,Z", help="seed point")
    p.set_defaults(func=cmd_streamline)

    p = sub.add_parser("classify", help="grid classification report")
    _field_args(p); _tol_args(p); _output_args(p)  # noqa: E702
    p.add_argument("--box", required=True, metavar="X0,X1,Y0,Y1,Z0,Z1")
    p.add_argument("--resolution", required=True, metavar="NX,NY,NZ")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_classify)

    probe = sub.add_parser("probe", help="Lagrangian probes")
    psub = probe.add_subparsers(dest="probe", parser_class=_Parser, metavar="PROBE")
    p = psub.add_parser("disk", help="material-disk perpendicularity defects")
    _field_args(p); _tol_args(p); _integrator_args(p); _output_args(p)  # noqa: E702
    p.add_argument("--point", required=True, metavar="X,Y,Z")
    p.add_argument("--ring-radius", type=float, default=None, help="also advect an 8-marker ring")
    p.set_defaults(func=cmd_probe_disk)
    p = psub.add_parser("cauchy", help="vorticity transported by the flow-map Jacobian")
    _field_args(p); _tol_args(p); _integrator_args(p); _output_args(p)  # noqa: E702
    p.add_argument("--point", required=True, metavar="X,Y,Z")
    p.add_argument("--omega0", required=True, metavar="WX,WY,WZ")
    p.add_argument("--t", type=float, default=None, help="time (default --t-end)")
    p.set_defaults(func=cmd_probe_cauchy)

    p = sub.add_parser("compare", help="criterion from analytic, FD and trajectory paths")
    _field_args(p); _tol_args(p); _output_args(p)  # noqa: E702
    p.add_argument("--point", action="append", metavar="X,Y,Z")
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="run built-in oracle suites")
    p.add_argument("suite", nargs="*", help=f"{', '.join(SUITES)} or all (default)")
    _output_args(p)
    p.set_defaults(func=cmd_verify)

    fieldp = sub.add_parser("field", help="field utilities")
    fsub = fieldp.add_subparsers(dest="field_command", parser_class=_Parser, metavar="ACTION")
    p = fsub.add_parser("check", help="parse a field and audit AD against finite differences")
    _field_args(p); _output_args(p)  # noqa: E702
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--box", default="-2,2", metavar="LO,HI")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grad-tol", type=float, default=1e-6)
    p.add_argument("--hess-tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_field_check)
    return parser


def _header(argv) -> str:
    return f"# vortexstretch {__version__}: " + " ".join(argv) + "\n"


def run(argv=None, stdout=None, stderr=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    old_err = sys.stderr
    sys.stderr = stderr
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError(parser.format_usage() + "vortexstretch: error: missing subcommand")
        payload, (cols, rows), code = args.func(args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=stderr)
        return EXIT_USAGE
    except ParseError as exc:
        src = exc.source
        print(f"syntax error: {exc}", file=stderr)
        if src:
            print(f"  {src}\n  {' ' * exc.position}^", file=stderr)
        return EXIT_USAGE
    except PreconditionError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except VortexError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_NUMERIC
    finally:
        sys.stderr = old_err

    if args.format == "json":
        text = to_json(payload) + "\n"
    else:
        text = to_csv(cols, rows)
    if not args.no_header:
        text = _header(argv) + text
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        sys.stderr.close()
        code = EXIT_OK
    sys.exit(code)


if __name__ == "__main__":
    main()
