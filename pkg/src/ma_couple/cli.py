"""Command-line front end: ``ma-couple {solve,eigen,sweep,verify}``.

Exit codes: 0 converged / all gates pass, 1 a verification gate failed,
2 nonexistence certified, 3 iteration budget exhausted, 4 iteration settled
but a residual gate failed, 64 bad flags, 65 unreadable record, 66 missing file.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import datetime as _dt
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import cone_report, ode_residual, threshold_bracket, verify_bounds
from .errors import InvalidSpecError
from .operators import ProblemSpec, Regime, apply_T2_scaled, apply_T_scaled
from .profile import Grid, RadialProfile, sup_norm
from .records import RunRecord, profile_csv, table_csv
from .solvers import (
    THRESHOLD_RTOL,
    SolveConfig,
    Status,
    principal_constant,
    single_equation_eigen,
    solve_system,
)

EXIT_OK = 0
EXIT_GATE = 1
EXIT_NONEXISTENCE = 2
EXIT_MAX_ITER = 3
EXIT_RESIDUAL = 4
EXIT_USAGE = 64
EXIT_DATAERR = 65
EXIT_NOINPUT = 66

STATUS_EXIT = {
    Status.CONVERGED: EXIT_OK,
    Status.NONEXISTENCE: EXIT_NONEXISTENCE,
    Status.MAX_ITER: EXIT_MAX_ITER,
    Status.GATE_FAILED: EXIT_RESIDUAL,
}
CROSS_CHECK_RTOL = 1e-4

log = logging.getLogger("ma_couple")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _float_list(items):
    out = []
    for item in items:
        for piece in item.replace(",", " ").split():
            out.append(float(piece))
    return out


def _config(args) -> SolveConfig:
    grid = Grid(args.grid) if args.grid is not None else Grid.default()
    return SolveConfig(grid=grid, tol_fixpoint=args.tol, max_iter=args.max_iter, initial_profile=args.init)


def _emit(text: str, path):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def solve_document(spec: ProblemSpec, cfg: SolveConfig, res, include_trace=False) -> dict:
    doc = {
        "status": res.status.value,
        "regime": res.regime.value if res.regime is not None else None,
        "verdict": res.message or res.status.value,
        "iterations": res.iterations,
        "final_change": res.final_change,
        "fixed_point_defect": res.fixed_point_defect,
        "norms": None,
        "residuals": None,
    }
    if res.v1 is not None:
        doc["norms"] = {"v1": sup_norm(res.v1), "v2": sup_norm(res.v2)}
        doc["residuals"] = res.residuals.as_dict()
    if res.eigen is not None:
        doc["eigen"] = res.eigen.as_dict()
        doc["eigen"]["threshold_product"] = spec.threshold_product
    if include_trace:
        doc["trace"] = list(res.trace)
    if res.v1 is not None:
        doc["profiles"] = {"v1": res.v1.values.tolist(), "v2": res.v2.values.tolist()}
    return doc


def cmd_solve(args) -> int:
    spec = ProblemSpec(args.dim, args.alpha, args.beta, args.lam, args.mu)
    cfg = _config(args)
    started = _now() if args.stamp else None
    res = solve_system(spec, cfg)
    record = RunRecord("solve", spec.as_dict(), cfg.summary(), solve_document(spec, cfg, res, args.trace))
    if args.stamp:
        record.timestamps = {"started": started, "finished": _now()}
    _emit(record.dumps(), args.out)
    csv_path = args.csv
    if csv_path is None and args.out not in (None, "-"):
        csv_path = str(Path(args.out).with_suffix(".csv"))
    if csv_path is not None and res.v1 is not None:
        _emit(profile_csv(cfg.grid.nodes, res.v1.values, res.v2.values), csv_path)
    line = f"{res.status.value}: regime={spec.regime.value} iterations={res.iterations}"
    if res.v1 is not None:
        line += f" |v1|={sup_norm(res.v1):.10g} residual={res.residual_sup:.3e}"
    if res.eigen is not None:
        line += f" C={res.eigen.C:.10g} lambda*mu^(alpha/N)={spec.threshold_product:.10g}"
    print(line, file=sys.stderr)
    return STATUS_EXIT[res.status]


def eigen_document(N, alpha, cfg, cross_check) -> dict:
    eig = principal_constant(N, alpha, cfg)
    br = threshold_bracket(N, alpha)
    doc = {
        "eigen": eig.as_dict(),
        "bracket": {"lower": br.lower, "upper": br.upper, "gamma": br.gamma, "gamma1": br.gamma1,
                    "contains_C": bool(br.contains(eig.C))},
    }
    if cross_check:
        if math.isclose(alpha, N):
            lam1 = single_equation_eigen(N, cfg)
            rel = abs(eig.C - lam1 ** (2 * N)) / eig.C
            doc["cross_check"] = {"lambda1": lam1, "lambda1_pow_2N": lam1 ** (2 * N), "relative_difference": rel,
                                  "tolerance": CROSS_CHECK_RTOL, "passed": bool(rel <= CROSS_CHECK_RTOL)}
        else:
            doc["cross_check"] = {"skipped": "identity C = lambda1^(2N) applies only when alpha == N"}
    doc["eigen_shape"] = eig.eigen_shape.values.tolist()
    return doc


def cmd_eigen(args) -> int:
    if args.dim < 2:
        raise UsageError("--dim must be >= 2 (the N = 1 reduction is a test oracle only)")
    if not args.alpha > 0:
        raise UsageError("--alpha must be positive")
    cfg = _config(args)
    spec = {"N": args.dim, "alpha": args.alpha, "beta": args.dim ** 2 / args.alpha}
    doc = eigen_document(args.dim, args.alpha, cfg, args.cross_check)
    record = RunRecord("eigen", spec, cfg.summary(), doc)
    _emit(record.dumps(), args.out)
    e, br = doc["eigen"], doc["bracket"]
    print(f"kappa={e['kappa']:.12g} C={e['C']:.12g} R*={e['critical_radius']:.12g} "
          f"bracket=[{br['lower']:g}, {br['upper']:.6g}]", file=sys.stderr)
    cc = doc.get("cross_check")
    if cc and "passed" in cc:
        print(f"cross-check |C - lambda1^{2 * args.dim}|/C = {cc['relative_difference']:.3e}", file=sys.stderr)
        if not cc["passed"]:
            return EXIT_GATE
    return EXIT_OK if br["contains_C"] else EXIT_GATE


SWEEP_HEADER = ["alpha", "beta", "regime", "status", "norm_v1", "residual", "iterations", "C"]


def _sweep_row(job):
    N, alpha, beta, cfg = job
    try:
        res = solve_system(ProblemSpec(N, alpha, beta), cfg)
    except Exception as exc:  # row-level failure is recorded, not fatal
        return [alpha, beta, "", f"error: {type(exc).__name__}: {exc}", "", "", "", ""]
    norm = sup_norm(res.v1) if res.v1 is not None else ""
    resid = res.residual_sup if res.v1 is not None else ""
    C = res.eigen.C if res.eigen is not None else ""
    return [alpha, beta, res.regime.value, res.status.value, norm, resid, res.iterations, C]


def cmd_sweep(args) -> int:
    alphas, betas = _float_list(args.alphas), _float_list(args.betas)
    if not alphas or not betas:
        raise UsageError("--alphas and --betas need at least one value each")
    if any(x <= 0 for x in alphas + betas):
        raise UsageError("exponents must be positive")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    ProblemSpec(args.dim, 1.0, 1.0)  # validates the dimension
    cfg = _config(args)
    jobs = [(args.dim, a, b, cfg) for a in alphas for b in betas]
    if args.jobs == 1:
        rows = [_sweep_row(j) for j in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    _emit(table_csv(SWEEP_HEADER, rows), args.out)
    return EXIT_OK


class GateReport:
    def __init__(self):
        self.gates = []

    def add(self, name, passed, detail=""):
        self.gates.append((name, bool(passed), detail))

    @property
    def failed(self):
        return [name for name, ok, _ in self.gates if not ok]

    def render(self):
        lines = [f"{'PASS' if ok else 'FAIL'}  {name:<22} {detail}" for name, ok, detail in self.gates]
        if self.failed:
            lines.append("failed gates: " + ", ".join(self.failed))
        return "\n".join(lines) + "\n"


def _verify_eigen_values(report, N, alpha, cfg, recorded_C):
    eig = principal_constant(N, alpha, cfg)
    rel = abs(eig.C - recorded_C) / eig.C
    report.add("threshold_constant", rel <= 1e-9, f"recomputed C={eig.C:.12g} recorded={recorded_C:.12g}")
    br = threshold_bracket(N, alpha)
    report.add("threshold_bracket", 1.0 < eig.C <= br.upper, f"1 < C <= {br.upper:.6g}")
    return eig


def verify_record(record: RunRecord) -> GateReport:
    report = GateReport()
    doc = record.to_document()
    cfg_d = record.config
    cfg = SolveConfig(grid=Grid(cfg_d["grid"]), tol_fixpoint=cfg_d["tol_fixpoint"],
                      max_iter=cfg_d["max_iter"], residual_gate=cfg_d["residual_gate"])
    gate = cfg.gate
    if record.command == "eigen":
        s = record.spec
        eig = _verify_eigen_values(report, s["N"], s["alpha"], cfg, doc["eigen"]["C"])
        cc = doc.get("cross_check")
        if cc and "passed" in cc:
            lam1 = single_equation_eigen(s["N"], cfg)
            rel = abs(eig.C - lam1 ** (2 * s["N"])) / eig.C
            report.add("cross_identity", rel <= CROSS_CHECK_RTOL, f"relative difference {rel:.3e}")
        return report
    if record.command != "solve":
        report.add("command", False, f"cannot verify command {record.command!r}")
        return report

    s = record.spec
    spec = ProblemSpec(s["N"], s["alpha"], s["beta"], s["lambda"], s["mu"])
    status = doc["status"]
    if status == Status.NONEXISTENCE.value:
        eig = _verify_eigen_values(report, spec.N, spec.alpha, cfg, doc["eigen"]["C"])
        gap = abs(spec.threshold_product - eig.C) / eig.C
        report.add("nonexistence", spec.regime is Regime.BALANCED and gap > THRESHOLD_RTOL,
                   f"|lambda*mu^(alpha/N) - C|/C = {gap:.3e}")
        return report
    report.add("status", status == Status.CONVERGED.value, f"recorded status {status}")
    if "profiles" not in doc:
        report.add("profiles", False, "record carries no solution profiles")
        return report
    grid = cfg.grid
    v1 = RadialProfile(grid, doc["profiles"]["v1"])
    v2 = RadialProfile(grid, doc["profiles"]["v2"])
    n1 = sup_norm(v1)

    fp_tol = 10 * cfg.tol_fixpoint
    if spec.regime is Regime.BALANCED:
        fp_tol += abs((spec.threshold_product / doc["eigen"]["C"]) ** (1.0 / spec.N) - 1.0)
    defect = sup_norm(apply_T_scaled(v1, spec) - v1) / n1
    report.add("fixed_point", defect <= fp_tol, f"|T v1 - v1|/|v1| = {defect:.3e} (<= {fp_tol:.1e})")
    pair = sup_norm(apply_T2_scaled(v1, spec) - v2) / max(sup_norm(v2), 1e-300)
    report.add("pair_consistency", pair <= 1e-9, f"|T2 v1 - v2|/|v2| = {pair:.3e}")
    res = ode_residual(v1, v2, spec)
    report.add("ode_residual", res.ode_residual_sup <= gate, f"{res.ode_residual_sup:.3e} (<= {gate:.1e})")
    report.add("pde_residual", res.pde_residual_sup <= gate, f"{res.pde_residual_sup:.3e} (<= {gate:.1e})")
    b = res.boundary_defect
    slope_scale = max(n1, sup_norm(v2))
    ok_b = b[0] <= 1e-12 * n1 and b[1] <= 1e-12 * sup_norm(v2) and max(b[2], b[3]) <= gate * slope_scale
    report.add("boundary", ok_b, "v(1) = 0, v'(0) = 0: " + ", ".join(f"{x:.2e}" for x in b))
    bounds = verify_bounds(v1, spec)
    report.add("norm_bounds", bounds.passed,
               f"lower margin {bounds.lower_margin}, upper margin {bounds.upper_margin:.3e}")
    cone_ok = cone_report(v1).passes and cone_report(v2).passes
    report.add("cone", cone_ok, "v1, v2 in K")
    return report


def cmd_verify(args) -> int:
    path = Path(args.record)
    if not path.is_file():
        print(f"record not found: {path}", file=sys.stderr)
        return EXIT_NOINPUT
    try:
        record = RunRecord.load(path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"unreadable record {path}: {exc}", file=sys.stderr)
        return EXIT_DATAERR
    try:
        report = verify_record(record)
    except (KeyError, TypeError, ValueError) as exc:
        print(f"malformed record {path}: {exc}", file=sys.stderr)
        return EXIT_DATAERR
    sys.stdout.write(report.render())
    return EXIT_GATE if report.failed else EXIT_OK


def _add_common(p):
    p.add_argument("--grid", type=int, default=None, help="number of grid nodes (default: $MA_COUPLE_GRID or 2048)")
    p.add_argument("--tol", type=float, default=1e-10, help="relative sup-norm change to stop iterating")
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--init", default="parabola", choices=["parabola", "linear", "constant-on-cone"])
    p.add_argument("--out", default=None, help="write the JSON document here (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ma-couple", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve the coupled system on the unit ball")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    _add_common(p)
    p.add_argument("--csv", default=None, help="profile table t,v1,v2,u1,u2 (default: next to --out)")
    p.add_argument("--trace", action="store_true", help="include the per-iteration trace")
    p.add_argument("--stamp", action="store_true", help="add wall-clock timestamps (breaks byte-identity)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eigen", help="threshold constant C of the balanced regime")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--cross-check", action="store_true", help="compare C with lambda1^(2N) when alpha == N")
    _add_common(p)
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("sweep", help="classification table over exponent pairs")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--alphas", nargs="+", required=True)
    p.add_argument("--betas", nargs="+", required=True)
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="re-check the gates of a stored JSON record")
    p.add_argument("--record", required=True)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, InvalidSpecError) as exc:
        print(f"ma-couple: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # grid / tolerance validation
        print(f"ma-couple: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
