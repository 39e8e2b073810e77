"""Command-line front end.

Every command prints a table (``--format csv`` or ``json``).  CSV output
starts with one ``# metadata: {...}`` comment line followed by a header row;
floats carry 17 significant digits so values survive a round trip exactly.
Column orders:

  figure fig2    a, xi_physical, xi_ppt, xi_bowles, xi_mapped, xi_mapped_printed,
                 xi_mapped_numeric, label
  figure fig3*   alpha, beta, d1, d2, d3, p, q, label, r_physical, r_ppt, r_bowles,
                 r_bowles_raw, r_mapped, r_mapped_raw, r_hull, r_tstate, u_star,
                 v_star, u_cert, v_cert, converged

Exit codes: 0 success, 2 invalid input, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .boundaries import (
    RayDirection,
    degenerate_t_audit,
    degenerate_t_radius,
    displaced_werner_xi,
    displaced_werner_xi_printed,
    mapped_boundary_radius,
    tstate_boundary_radius,
)
from .channels import (
    ExtremalParams,
    apply_channel_a,
    choi_min_eigenvalue,
    extremal_map,
    is_cptp,
    kraus_completeness,
    kraus_operators,
)
from .errors import InvalidInputError, NonConvergenceError
from .quadrature import DEFAULT_ORDER, build_sphere_rule
from .qubit_core import DEFAULT_TOL, BlochState, CanonicalState, canonical_form
from .regions import FIG2_COLUMNS, FIG3_COLUMNS, ClassifyConfig, SliceSpec, SliceTable, classify_detail, figure_slice

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2, 3
STATE_KEYS = ("ax", "ay", "az", "bx", "by", "bz") + tuple(f"t{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3))


# ----------------------------------------------------------------- tables

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return None if math.isnan(x) else x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if hasattr(x, "value"):
        return x.value
    return x


def render_table(table: SliceTable, fmt: str) -> str:
    if fmt == "json":
        rows = [{c: _jsonable(v) for c, v in zip(table.columns, row)} for row in table.rows]
        return json.dumps({"metadata": _jsonable(table.metadata), "rows": rows}, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("# metadata: " + json.dumps(_jsonable(table.metadata), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _parse_cell(s: str):
    if s == "":
        return None
    try:
        return float(s)
    except ValueError:
        return s


def parse_table(text: str, fmt: str = "csv") -> SliceTable:
    """Inverse of :func:`render_table` (numbers come back as floats)."""
    if fmt == "json":
        obj = json.loads(text)
        rows = obj["rows"]
        columns = list(rows[0]) if rows else obj["metadata"].get("columns", [])
        return SliceTable(columns, [tuple(r[c] for c in columns) for r in rows], obj["metadata"])
    lines = text.splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("# metadata: "):
            meta = json.loads(line[len("# metadata: "):])
        elif not line.startswith("#"):
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = [tuple(_parse_cell(c) for c in row) for row in reader]
    return SliceTable(columns, rows, meta)


def data_rows(text: str) -> list[str]:
    """Lines of a CSV export without the metadata comment (used for determinism checks)."""
    return [line for line in text.splitlines() if not line.startswith("#")]


def _single(columns, values, meta) -> SliceTable:
    return SliceTable(list(columns), [tuple(values)], meta)


# ------------------------------------------------------------- arguments

def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--order", type=int, default=DEFAULT_ORDER, help="sphere quadrature order")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="eigenvalue tolerance")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    return p


def _state_args(p):
    p.add_argument("--state-file", help="JSON object with keys ax..bz, t11..t33 (missing keys are 0)")
    p.add_argument("--a", type=float, default=0.0, help="Alice Bloch length (canonical form)")
    p.add_argument("--a-dir", type=float, nargs=3, default=(0.0, 0.0, 1.0), metavar=("X", "Y", "Z"))
    p.add_argument("--t1", type=float, default=0.0)
    p.add_argument("--t2", type=float, default=0.0)
    p.add_argument("--t3", type=float, default=0.0)


def _direction_args(p):
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float, default=math.pi / 4)
    p.add_argument("--isotropic", action="store_true", help="use the Werner direction -(1,1,1)/sqrt(3)")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="nonsteer", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="label a state and report border distances")
    _state_args(p)
    p.add_argument("--hull-rays", type=int, default=64)

    pb = sub.add_parser("boundary", help="evaluate a single border")
    bsub = pb.add_subparsers(dest="kind", required=True)
    p = bsub.add_parser("tstate", parents=[common])
    _direction_args(p)
    p = bsub.add_parser("mapped", parents=[common])
    p.add_argument("--a", type=float, required=True)
    _direction_args(p)
    p = bsub.add_parser("displaced-werner", parents=[common])
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--check", action="store_true", help="also run the numeric optimisation")
    p = bsub.add_parser("degenerate-t", parents=[common])
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--alpha", type=float, help="single angle; default is a grid over (pi/2, pi)")
    p.add_argument("--n-alpha", type=int, default=64)

    p = sub.add_parser("channel", parents=[common], help="inspect an extremal qubit channel")
    p.add_argument("action", choices=("check", "kraus", "apply"))
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--perm", default="0,1,2")
    _state_args(p)

    epilog = ("CSV columns, in order:\n  fig2   " + ", ".join(FIG2_COLUMNS)
              + "\n  fig3*  " + ", ".join(FIG3_COLUMNS))
    p = sub.add_parser("figure", parents=[common], help="export slice data behind a figure",
                       epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("figure", choices=("fig2", "fig3a", "fig3b", "custom"))
    p.add_argument("--a", type=float, help="Alice Bloch length (fig3a 0.1, fig3b 0.2)")
    p.add_argument("--ratio", type=float, help="slice constraint t2 = ratio * t1")
    p.add_argument("--resolution", type=int, help="rays per slice (default 256)")
    p.add_argument("--alpha-min", type=float)
    p.add_argument("--alpha-max", type=float)

    sub.add_parser("selftest", parents=[common], help="run the invariant suite at reduced resolution")
    return parser


def _read_state(args) -> BlochState | CanonicalState:
    if args.state_file:
        with open(args.state_file) as fh:
            obj = json.load(fh)
        unknown = set(obj) - set(STATE_KEYS)
        if unknown:
            raise InvalidInputError(f"unknown state keys: {sorted(unknown)}")
        g = lambda k: float(obj.get(k, 0.0))
        T = [[g(f"t{i}{j}") for j in (1, 2, 3)] for i in (1, 2, 3)]
        return BlochState([g("ax"), g("ay"), g("az")], [g("bx"), g("by"), g("bz")], T)
    d = np.asarray(args.a_dir, dtype=float)
    if np.linalg.norm(d) == 0:
        raise InvalidInputError("--a-dir must be non-zero")
    return CanonicalState(args.a * d / np.linalg.norm(d), [args.t1, args.t2, args.t3])


def _direction(args) -> RayDirection:
    if args.isotropic:
        return RayDirection.isotropic()
    if args.alpha is None:
        raise InvalidInputError("give --alpha (and --beta) or --isotropic")
    return RayDirection(args.alpha, args.beta)


def _meta(args, **kw):
    meta = {"command": args.command, "order": args.order, "tol": args.tol, "code_version": __version__}
    meta.update(kw)
    return meta


# --------------------------------------------------------------- commands

def cmd_classify(args):
    state = _read_state(args)
    if isinstance(state, BlochState):
        state, _ = canonical_form(state)
    cfg = ClassifyConfig(tol=args.tol, order=args.order, hull_rays=args.hull_rays)
    det = classify_detail(state, cfg)
    cols = ["label", "norm_t", "r_physical", "r_ppt", "r_bowles", "r_mapped", "r_mapped_raw", "r_hull"]
    vals = [det["label"].value] + [det.get(c) for c in cols[1:]]
    meta = _meta(args, a=state.a.tolist(), t=state.t.tolist(), hull_rays=cfg.hull_rays,
                 mapped_applicable=det["mapped_applicable"])
    return _single(cols, vals, meta), EXIT_OK


def cmd_boundary(args):
    rule = build_sphere_rule(args.order)
    status = EXIT_OK
    if args.kind == "tstate":
        d = _direction(args)
        r = tstate_boundary_radius(d, rule)
        t = r * d.vector
        cols = ["alpha", "beta", "r", "t1", "t2", "t3"]
        vals = [d.alpha, d.beta, r, *t]
        if args.isotropic:
            cols.append("mu")
            vals.append(r / math.sqrt(3))
        return _single(cols, vals, _meta(args)), status
    if args.kind == "mapped":
        d = _direction(args)
        s = mapped_boundary_radius(args.a, d, rule)
        cols = ["a", "alpha", "beta", "r", "u_star", "v_star", "r_certified", "u_cert", "v_cert",
                "preimage_physical", "converged"]
        vals = [s.a, s.alpha, s.beta, s.r, s.u_star, s.v_star, s.r_certified, s.u_cert, s.v_cert,
                int(s.preimage_physical), int(s.converged)]
        if args.isotropic:
            cols.append("xi")
            vals.append(s.r / math.sqrt(3))
        if not s.converged:
            status = EXIT_NONCONVERGED
        return _single(cols, vals, _meta(args)), status
    if args.kind == "displaced-werner":
        cols = ["a", "xi", "xi_printed"]
        vals = [args.a, displaced_werner_xi(args.a), displaced_werner_xi_printed(args.a)]
        if args.check:
            if not args.a < 1:
                raise InvalidInputError("--check needs a < 1")
            s = mapped_boundary_radius(args.a, RayDirection.isotropic(), rule)
            cols += ["xi_numeric", "u_star", "v_star"]
            vals += [s.r / math.sqrt(3), s.u_star, s.v_star]
        return _single(cols, vals, _meta(args)), status
    # degenerate-t
    if args.alpha is not None:
        alphas = [args.alpha]
    else:
        n = args.n_alpha
        alphas = [math.pi / 2 + (math.pi / 2) * (k + 1) / (n + 1) for k in range(n)]
    rows = degenerate_t_audit(args.a, alphas, args.order)
    cols = list(rows[0])
    n_err = sum(1 for r in rows if r["printed_error"])
    printed = [abs(r["discrepancy_printed"]) for r in rows if r["discrepancy_printed"] is not None]
    report = {
        "n_alpha": len(rows),
        "printed_branch_domain_errors": n_err,
        "printed_max_abs_discrepancy": max(printed) if printed else None,
        "corrected_max_abs_discrepancy": max(abs(r["discrepancy_corrected"]) for r in rows),
        "reference_max_refinement_delta": max(r["reference_delta"] for r in rows),
        "printed_c": "2 cot(alpha)/(1-a) - 1",
        "corrected_c": "2 cot(alpha)^2/(1-a) - 1",
    }
    table = SliceTable(cols, [tuple(r[c] for c in cols) for r in rows], _meta(args, a=args.a, report=report))
    return table, status


def cmd_channel(args):
    try:
        perm = tuple(int(p) for p in args.perm.split(","))
        ch = extremal_map(ExtremalParams(args.u, args.v, perm))
    except ValueError as exc:
        raise InvalidInputError(str(exc)) from exc
    if args.action == "check":
        cols = ["u", "v", "perm", "m1", "m2", "m3", "lam1", "lam2", "lam3", "choi_min_eig", "cptp"]
        vals = [args.u, args.v, args.perm, *ch.m_eff, *ch.lam_eff, choi_min_eigenvalue(ch), int(is_cptp(ch))]
        return _single(cols, vals, _meta(args)), EXIT_OK
    if args.action == "kraus":
        ops = kraus_operators(ch)
        cols = ["k"] + [f"{e}{i}{j}_{part}" for e in "A" for i in (0, 1) for j in (0, 1) for part in ("re", "im")]
        rows = []
        for k, A in enumerate(ops):
            rows.append((k, *[getattr(A[i, j], part) for i in (0, 1) for j in (0, 1) for part in ("real", "imag")]))
        err = float(np.max(np.abs(kraus_completeness(ops) - np.eye(2))))
        return SliceTable(cols, rows, _meta(args, completeness_error=err)), EXIT_OK
    state = _read_state(args)
    out = apply_channel_a(ch, state)
    cols = ["ax", "ay", "az", "bx", "by", "bz"] + [f"t{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
    return _single(cols, [*out.a, *out.b, *out.T.ravel()], _meta(args)), EXIT_OK


def cmd_figure(args):
    spec = SliceSpec.for_figure(
        args.figure, a=args.a, ratio=args.ratio, resolution=args.resolution, order=args.order,
        tol=args.tol, alpha_min=args.alpha_min, alpha_max=args.alpha_max,
    )
    table = figure_slice(spec)
    status = EXIT_OK
    if "converged" in table.columns and not all(table.column("converged")):
        status = EXIT_NONCONVERGED
    return table, status


def cmd_selftest(args):
    from .selftest import run_selftest

    results = run_selftest()
    rows = [(name, "PASS" if ok else "FAIL", detail) for name, ok, detail in results]
    status = EXIT_OK if all(ok for _, ok, _ in results) else EXIT_FAIL
    return SliceTable(["check", "result", "detail"], rows, _meta(args)), status


COMMANDS = {
    "classify": cmd_classify,
    "boundary": cmd_boundary,
    "channel": cmd_channel,
    "figure": cmd_figure,
    "selftest": cmd_selftest,
}


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        table, status = COMMANDS[args.command](args)
    except InvalidInputError as exc:
        print(f"nonsteer: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NonConvergenceError as exc:
        print(f"nonsteer: not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    text = render_table(table, args.format)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if status == EXIT_NONCONVERGED:
        print("nonsteer: warning: some optimisations did not converge", file=sys.stderr)
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
