"""Command-line entry point: ``isosolitons {solve,sweep,flow,verify}``.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cases import CaseKind, parse_case
from .errors import CflError, IsoSolitonError
from .integrator import DEFAULT_RMAX, DEFAULT_TOL
from .outputs import (SNAPSHOT_COLUMNS, SWEEP_COLUMNS, TRAJECTORY_COLUMNS, solve_summary,
                      trajectory_columns, trajectory_rows, write_csv, write_json)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3
log = logging.getLogger("isosolitons")

CLASSIFY_HELP = ("classification: DecayToZero if |T|^2 decreases over the last decade of r and "
                 "ends below 1e-3 or falls at least like r^-0.25 over the final half decade; "
                 "Blowup if the run hit the |z| > 1e8 cap or r^3|u'| passed 1e6 while growing")


class UsageError(Exception):
    pass


def _common(p):
    p.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="integrator tolerance (default 1e-10)")
    p.add_argument("--rmax", type=float, default=DEFAULT_RMAX, help="outer radius (default 100)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    p.add_argument("--plot", action="store_true", help="also render a PNG figure")


def build_parser():
    ap = argparse.ArgumentParser(prog="isosolitons", description=__doc__.splitlines()[0],
                                 epilog=CLASSIFY_HELP)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one soliton", epilog=CLASSIFY_HELP)
    s.add_argument("--case", required=True, choices=[k.value for k in CaseKind if k is not CaseKind.CYLINDER_CY])
    s.add_argument("--c", type=float, default=0.0, help="soliton constant (flat, nk)")
    s.add_argument("--lambda", dest="lam", type=float, default=1.0, help="Bryant-Salamon scale")
    s.add_argument("--a1", type=float, required=True, help="u'(0)")
    _common(s)

    w = sub.add_parser("sweep", help="grid of solves over (c or lambda) x a1", epilog=CLASSIFY_HELP)
    w.add_argument("--case", required=True, choices=[k.value for k in CaseKind if k is not CaseKind.CYLINDER_CY])
    w.add_argument("--c-values", type=float, nargs="*", default=None)
    w.add_argument("--lambda-values", type=float, nargs="*", default=None)
    w.add_argument("--a1-values", type=float, nargs="*", default=[1.0])
    w.add_argument("--workers", type=int, default=1)
    _common(w)

    f = sub.add_parser("flow", help="run a flow from a JSON config")
    f.add_argument("--config", type=Path, required=True)
    _common(f)

    v = sub.add_parser("verify", help="run oracle and invariant suites")
    v.add_argument("--suite", default="all",
                   choices=["all", "geometry", "flat-oracle", "series", "envelope", "q", "lyapunov"])
    v.add_argument("--out-dir", type=Path, default=None)
    return ap


# -- solve ---------------------------------------------------------------------

def _solve(case, a1, args):
    from .integrator import solve_soliton
    return solve_soliton(case, a1, r_max=args.rmax, tol=args.tol)


def _check_positive(args):
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    if not args.rmax > 0.4:
        raise UsageError("--rmax must exceed the series handoff radius")


def cmd_solve(args):
    _check_positive(args)
    try:
        case = parse_case(args.case, c=args.c, lam=args.lam)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    traj = _solve(case, args.a1, args)
    summary = solve_summary(traj, args.rmax)
    if args.format == "csv":
        write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, trajectory_rows(traj))
    else:
        write_json(out / "trajectory.json", trajectory_columns(traj))
    write_json(out / "summary.json", summary)
    if args.plot:
        from .plotting import plot_solution
        plot_solution(traj, out / "solution.png")
    print(f"{case.label} a1={args.a1:g}: {summary['classification']} "
          f"(|T|^2 at r={summary['endpoint']['r']:.4g} is {summary['endpoint']['torsion_norm_sq']:.4g})")
    return EXIT_OK


# -- sweep ---------------------------------------------------------------------

def sweep_grid(args):
    """Grid points ``(index, case, a1)``, ``c`` or ``lambda`` outermost."""
    if args.case in ("bs-a", "bs-b"):
        outer = args.lambda_values if args.lambda_values is not None else [1.0]
        cases = [parse_case(args.case, lam=v) for v in outer]
    else:
        outer = args.c_values if args.c_values is not None else [0.0]
        cases = [parse_case(args.case, c=v) for v in outer]
    pts = [(case, a1) for case in cases for a1 in args.a1_values]
    return [(i, case, a1) for i, (case, a1) in enumerate(pts)]


def sweep_point(point, r_max, tol):
    """One sweep row; failures are recorded in the row, not raised."""
    from .integrator import solve_soliton
    index, case, a1 = point
    lam = case.lam if case.is_bryant_salamon else None
    c = case.c if case.is_cone else None
    try:
        traj = solve_soliton(case, a1, r_max=r_max, tol=tol)
    except (IsoSolitonError, ValueError, ArithmeticError) as exc:
        return [index, case.kind.value, c, lam, a1, "", None, None, None, None, f"{type(exc).__name__}: {exc}"]
    d = traj.diagnostics
    return [index, case.kind.value, c, lam, a1, d["classification"].value, float(d["torsion_norm_sq"][-1]),
            d["residual_max"], traj.r_end, traj.truncated, ""]


def cmd_sweep(args):
    _check_positive(args)
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    try:
        grid = sweep_grid(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.workers == 1 or len(grid) <= 1:
        rows = [sweep_point(p, args.rmax, args.tol) for p in grid]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            futures = [pool.submit(sweep_point, p, args.rmax, args.tol) for p in grid]
            rows = [fut.result() for fut in futures]
    rows.sort(key=lambda row: row[0])
    out = args.out_dir
    if args.format == "csv":
        write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    else:
        write_json(out / "sweep.json", [dict(zip(SWEEP_COLUMNS, row)) for row in rows])
    if args.plot and rows:
        _plot_sweep(rows, out / "sweep.png")
    counts = {}
    for row in rows:
        counts[row[5] or "error"] = counts.get(row[5] or "error", 0) + 1
    print(f"{len(rows)} points: " + (", ".join(f"{k}={v}" for k, v in sorted(counts.items())) or "empty grid"))
    return EXIT_OK


def _plot_sweep(rows, path):
    import matplotlib.pyplot as plt
    from .plotting import STYLE
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        marks = {"DecayToZero": "o", "Blowup": "x", "Inconclusive": "s", "": "^"}
        for row in rows:
            outer = row[2] if row[2] is not None else row[3]
            ax.scatter(outer, row[4], marker=marks.get(row[5], "^"), color="k")
        ax.set_xlabel("c" if rows[0][2] is not None else "lambda")
        ax.set_ylabel("a1")
        ax.set_title("o decay, x blow-up, s inconclusive")
        fig.savefig(path)
        plt.close(fig)


# -- flow ------------------------------------------------------------------------

def load_flow_config(path: Path):
    from .flow import FlowConfig
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {context}\n    "
                         f"{' ' * (exc.colno - 1)}^") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: top level must be a JSON object")
    try:
        return FlowConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_flow(args):
    from .flow import run_flow, snapshot_rows
    cfg = load_flow_config(args.config)
    try:
        report = run_flow(cfg)
    except CflError as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    out = args.out_dir
    for i, g in enumerate(report.snapshots):
        rows = snapshot_rows(g)
        if args.format == "csv":
            write_csv(out / f"snapshot_{i:04d}.csv", SNAPSHOT_COLUMNS, rows)
        else:
            write_json(out / f"snapshot_{i:04d}.json",
                       {"t": g.t, **{k: rows[:, j] for j, k in enumerate(SNAPSHOT_COLUMNS)}})
    final = report.snapshots[-1]
    rep = report.as_dict()
    rep["final_sup_dev_from_mean"] = float(np.max(np.abs(final.u - np.mean(final.u))))
    rep["t_final"] = final.t
    write_json(out / "report.json", rep)
    if args.plot:
        from .plotting import plot_flow
        plot_flow(report, out / "flow.png")
    print(f"flow to t={final.t:.6g} in {report.steps} steps ({report.reason}); "
          f"sup|u|={report.sup_u[-1]:.6g}")
    return EXIT_OK


# -- verify ------------------------------------------------------------------------

def cmd_verify(args):
    from .verification import run_suite
    results = run_suite(args.suite)
    ok = True
    width = max(len(c.name) for checks in results.values() for c in checks)
    print(f"{'suite':<12} {'check':<{width}}  {'value':>12}  {'limit':>9}  result")
    table = []
    for suite, checks in results.items():
        for c in checks:
            ok &= c.passed
            print(f"{suite:<12} {c.name:<{width}}  {c.value:>12.4g}  {c.limit:>9.3g}  {'PASS' if c.passed else 'FAIL'}")
            table.append({"suite": suite, "check": c.name, "value": c.value, "limit": c.limit, "passed": c.passed})
    if args.out_dir is not None:
        write_json(args.out_dir / "verify.json", table)
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "flow": cmd_flow, "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; remap
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IsoSolitonError, ArithmeticError, ValueError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        out = getattr(args, "out_dir", None)
        if out is not None:
            write_json(Path(out) / "error.json", diag)
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
