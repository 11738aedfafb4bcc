"""Command-line front end.

Subcommands: ``bound``, ``prob-curve``, ``certify``, ``catalysis`` and
``derivative-check``.  Reports go to standard output, diagnostics to standard
error.  Exit codes: 0 consistent, 2 usage error, 3 solver non-convergence,
4 consistency violation.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import logging
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dsl
from .bases import subalgebra_bases, tensor_embedding
from .catalysis import catalysis_verdict
from .derivative import (
    analytic_derivative,
    choi,
    choi_subgroup,
    dsl_derivative,
    finite_difference_derivative,
    tensor_power_derivative,
)
from .errors import UqcError
from .linalg import INPUT_TOL, check_special_unitary, haar_unitary, load_matrix
from .prob import CLOSED_FORM_TASKS, curve_csv, curve_point
from .registry import SCHEMA_VERSION, assemble_report, reports_csv, round_sig
from .sdp.certificates import verify_certificate
from .sdp.problems import form_sizes, solve_dual, solve_primal, solve_subgroup
from .tasks import TASK_NAMES, Task

log = logging.getLogger("uqcbounds")

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGENCE, EXIT_INCONSISTENT = 0, 2, 3, 4
D_MIN, D_MAX, TENSOR_MAX = 2, 8, 8
# the second (cross-check) solve is skipped above this many barrier coordinates
CROSS_CHECK_MAX = 700
DERIVATIVE_TOL = 1e-6
SCHEMA_PATH = Path(__file__).with_name("report.schema.json")


def _dim_of(J):
    return int(round(np.sqrt(J.shape[0])))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p, task_required=True, expr=True):
    g = p.add_mutually_exclusive_group(required=task_required)
    g.add_argument("--task", help=f"built-in task: {', '.join(TASK_NAMES)}; 'iteration:3' sets the order")
    if expr:
        g.add_argument("--f-expr", help="target map in the expression language, e.g. 'conj o inv'")
    p.add_argument("--order", type=int, help="iteration order n")
    dg = p.add_mutually_exclusive_group(required=True)
    dg.add_argument("--d", type=int, help="dimension")
    dg.add_argument("--d-range", help="dimensions, e.g. '2-5' or '2,3,4'")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uqc-bounds", description="Query-complexity lower bounds for unitary transformations.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug diagnostics on standard error")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bound", help="solve the SDP lower bound")
    _add_common(p)
    p.add_argument("--u0", default="identity", help="base point: identity, haar:<seed> or a matrix file")
    p.add_argument("--subgroup", default="full", help="full, so, diag or tensor:<n>")
    p.add_argument("--round", action="store_true", help="also report the integer query bound")

    p = sub.add_parser("prob-curve", help="success-probability bounds for N = 1..n-max")
    _add_common(p, expr=False)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--u0", default="identity")

    p = sub.add_parser("certify", help="check the closed-form primal point and dual witness")
    _add_common(p, expr=False)
    p.add_argument("--u0", default="identity")

    p = sub.add_parser("catalysis", help="decide whether tightness rules out catalytic protocols")
    _add_common(p, expr=False)
    p.add_argument("--known", type=int, default=None, help="achievable query count (default: registry)")
    p.add_argument("--u0", default="identity")

    p = sub.add_parser("derivative-check", help="compare the exact derivative with finite differences")
    _add_common(p)
    p.add_argument("--u0", default="identity")
    p.add_argument("--eps", type=float, default=1e-4)
    return parser


def _dims(args):
    if args.d is not None:
        ds = [args.d]
    else:
        text = args.d_range.strip()
        m = re.fullmatch(r"(\d+)\s*-\s*(\d+)", text)
        if m:
            ds = list(range(int(m.group(1)), int(m.group(2)) + 1))
        else:
            try:
                ds = [int(x) for x in text.split(",") if x.strip()]
            except ValueError:
                raise UsageError(f"cannot parse --d-range {text!r}")
        if not ds:
            raise UsageError(f"empty --d-range {text!r}")
    return sorted(set(ds))


def _task(args):
    if getattr(args, "task", None) is None:
        return None
    try:
        task = Task.parse(args.task, args.order)
    except (UqcError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    return task


def _subgroup(text):
    if text in ("full", "so", "diag"):
        return text, None
    m = re.fullmatch(r"tensor:(\d+)", text)
    if m and int(m.group(1)) >= 2:
        return "tensor", int(m.group(1))
    raise UsageError(f"--subgroup must be full, so, diag or tensor:<n> (n >= 2), got {text!r}")


def _u0(spec, d):
    if spec in ("identity", "I", None):
        return np.eye(d, dtype=complex)
    m = re.fullmatch(r"haar:(\d+)", spec)
    if m:
        return haar_unitary(d, int(m.group(1)))
    try:
        U = load_matrix(spec, unitary=True)
    except OSError as exc:
        raise UsageError(f"cannot read --u0 file {spec!r}: {exc}") from exc
    if U.shape[0] != d:
        raise UsageError(f"--u0 matrix is {U.shape[0]}-dimensional, expected {d}")
    return check_special_unitary(U, INPUT_TOL, what=spec)


def _threads():
    env = os.environ.get("UQC_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"UQC_THREADS must be a positive integer, got {env!r}")
        if n < 1:
            raise UsageError(f"UQC_THREADS must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def _map(fn, items):
    """Evaluate independent points concurrently; results keep input order."""
    items = list(items)
    workers = min(_threads(), len(items)) or 1
    if workers == 1:
        return [fn(x) for x in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class _Outcome:
    results: list  # JSON-able dicts
    reports: list  # BoundReport objects (for csv)
    exit_code: int
    text: str
    csv: str | None = None


def _check_d(d, subgroup="full", n=None):
    if subgroup == "tensor":
        if d < 2 or d**n > TENSOR_MAX:
            raise UsageError(f"tensor product dimension d^n = {d}^{n} must be at most {TENSOR_MAX} "
                             "(the free operators grow as d^(2n) per complement element)")
    elif not D_MIN <= d <= D_MAX:
        raise UsageError(f"d must lie in [{D_MIN}, {D_MAX}], got {d}")


def _exit_for(reports):
    if any(r.solver_status != "optimal" for r in reports):
        return EXIT_NONCONVERGENCE
    if any(r.status != "consistent" for r in reports):
        return EXIT_INCONSISTENT
    return EXIT_OK


def _fmt(x):
    return "-" if x is None else (f"{x:.9g}" if isinstance(x, float) else str(x))


# ---------------------------------------------------------------- bound

def _bound_point(args, task, expr_text, subgroup, n_tensor, d):
    U0 = _u0(args.u0, d)
    if task is not None and task.subgroup != "full":
        if subgroup not in ("full", task.subgroup):
            raise UsageError(f"task {task} already fixes the subgroup {task.subgroup}")
        subgroup = task.subgroup
    if expr_text is not None:
        try:
            expr = dsl.parse(expr_text, d, base_dir=Path.cwd())
        except UqcError as exc:
            raise UsageError(str(exc)) from exc
        g = dsl_derivative(expr, U0)
    else:
        g = analytic_derivative(task, U0 if task.subgroup == "full" and subgroup == "full" else None, d=d)
    if subgroup == "full":
        J = choi(g).matrix
        primal = solve_primal(J)
        dual = solve_dual(J) if max(form_sizes(_dim_of(J))) <= CROSS_CHECK_MAX else primal
    else:
        if subgroup == "tensor":
            g = tensor_power_derivative(g, n_tensor)
            sub, comp = tensor_embedding(d, n_tensor)
        else:
            sub, comp = subalgebra_bases(d, subgroup)
        J = choi_subgroup(g, sub, comp)[0].matrix
        primal = solve_subgroup(J, comp)
        dual = primal
        if max(form_sizes(_dim_of(J), comp)) <= CROSS_CHECK_MAX:
            dual = solve_subgroup(J, comp, form="dual" if primal.method == "primal" else "primal")
    lower = max(primal.dual_value, dual.dual_value)
    upper = min(primal.primal_value, dual.primal_value)
    status = "optimal" if primal.status == "optimal" and dual.status == "optimal" else "max_iter"
    sg = subgroup if n_tensor is None else f"tensor:{n_tensor}"
    report = assemble_report(task, d, primal.primal_value, dual_value=lower, gap=upper - lower,
                             solver_status=status, expr_text=expr_text, subgroup=sg,
                             integer_rounding=args.round)
    if abs(primal.primal_value - dual.primal_value) > 1e-5:
        report.violations.append("primal and dual solves disagree")
        report.status = "inconsistent"
    return report


def _cmd_bound(args):
    task = _task(args)
    subgroup, n_tensor = _subgroup(args.subgroup)
    ds = _dims(args)
    for d in ds:
        _check_d(d, subgroup, n_tensor)
    reports = _map(lambda d: _bound_point(args, task, args.f_expr, subgroup, n_tensor, d), ds)
    lines = [f"{'task':<16} {'d':>2} {'sdp':>12} {'gap':>10} {'closed':>8} {'refined':>8} {'best':>8}  status"]
    for r in reports:
        name = r.task["name"] if r.task["name"] != "custom" else r.task["parameters"]["expr"]
        if r.task["parameters"].get("order"):
            name += f"({r.task['parameters']['order']})"
        bk = r.best_known_achievable
        best = None if bk is None else (bk["value"] if bk["value"] is not None else "~(pi/2)d^2")
        lines.append(f"{name:<16} {r.d:>2} {_fmt(r.numeric_sdp_value):>12} {r.gap:>10.2e} "
                     f"{_fmt(r.closed_form_value):>8} {_fmt(r.refined_bound and r.refined_bound['value']):>8} "
                     f"{_fmt(best):>8}  {r.status}"
                     + (f" (integer bound {r.integer_bound})" if r.integer_bound is not None else ""))
        for v in r.violations:
            log.error("d=%d: %s", r.d, v)
    return _Outcome([r.to_json() for r in reports], reports, _exit_for(reports), "\n".join(lines) + "\n",
                    reports_csv(reports))


# ---------------------------------------------------------------- prob-curve

def _cmd_prob_curve(args):
    task = _task(args)
    if task.subgroup != "full":
        raise UsageError("prob-curve supports the unrestricted tasks only")
    if args.n_max < 1:
        raise UsageError("--n-max must be at least 1")
    ds = _dims(args)
    for d in ds:
        _check_d(d)
    prepared = {}
    for d in ds:
        J = choi(analytic_derivative(task, _u0(args.u0, d), d=d)).matrix
        prepared[d] = (J, solve_primal(J))
    grid = [(d, N) for d in ds for N in range(1, args.n_max + 1)]
    points = _map(lambda dn: curve_point(task, dn[0], dn[1], prepared[dn[0]][0],
                                         prepared[dn[0]][1].primal_value), grid)
    reports = []
    for d in ds:
        sol = prepared[d][1]
        rows = [p for p in points if p.d == d]
        r = assemble_report(task, d, sol.primal_value, dual_value=sol.dual_value, gap=sol.gap,
                            solver_status=sol.status, probabilistic=rows)
        for p in rows:
            if p.closed_form is not None and p.max_p_sdp > p.closed_form + 1e-6:
                r.violations.append(f"N={p.N}: SDP probability exceeds the closed form")
            if p.max_p_sdp > p.canonical + 1e-6:
                r.violations.append(f"N={p.N}: SDP probability exceeds the canonical bound")
            if abs(p.max_p_sdp - p.trace_norm_path) > 1e-3:
                r.violations.append(f"N={p.N}: bisection and trace-norm paths disagree")
        if r.violations:
            r.status = "inconsistent"
        reports.append(r)
    lines = [f"{'task':<14} {'d':>2} {'N':>3} {'max_p_sdp':>12} {'closed_form':>12} {'canonical':>12} {'trace_norm':>12}"]
    for p in points:
        lines.append(f"{p.task:<14} {p.d:>2} {p.N:>3} {_fmt(p.max_p_sdp):>12} {_fmt(p.closed_form):>12} "
                     f"{_fmt(p.canonical):>12} {_fmt(p.trace_norm_path):>12}")
    if task.name == "conjugation":
        log.info("exact conjugation is known to be impossible below d - 1 queries; closed form 1 there is vacuous")
    return _Outcome([r.to_json() for r in reports], reports, _exit_for(reports), "\n".join(lines) + "\n",
                    curve_csv(points))


# ---------------------------------------------------------------- certify

def _cmd_certify(args):
    task = _task(args)
    ds = _dims(args)
    for d in ds:
        _check_d(d)

    def one(d):
        cert = verify_certificate(task, d, _u0(args.u0, d))
        return assemble_report(task, d, cert.primal_value, dual_value=cert.dual_value,
                               gap=cert.primal_value - cert.dual_value, certificate=cert)

    reports = _map(one, ds)
    lines = [f"{'task':<16} {'d':>2} {'claimed':>8} {'primal':>10} {'dual':>10} {'min eig':>10}  valid"]
    for r in reports:
        c = r.certificate
        ok = c["primal_feasible"] and c["dual_feasible"] and c["values_match"]
        lines.append(f"{c['task']:<16} {r.d:>2} {_fmt(c['claimed_value']):>8} {_fmt(c['primal_value']):>10} "
                     f"{_fmt(c['dual_value']):>10} {c['primal_min_eig']:>10.2e}  {'yes' if ok else 'NO'}")
    return _Outcome([r.to_json() for r in reports], reports, _exit_for(reports), "\n".join(lines) + "\n",
                    reports_csv(reports))


# ---------------------------------------------------------------- catalysis

def _cmd_catalysis(args):
    task = _task(args)
    ds = _dims(args)
    for d in ds:
        _check_d(d)

    def one(d):
        known = "registry" if args.known is None else args.known
        v = catalysis_verdict(task, d, known, U0=_u0(args.u0, d))
        return assemble_report(task, d, v.sdp_value, catalysis=v)

    reports = _map(one, ds)
    lines = [f"{'task':<16} {'d':>2} {'sdp':>12} {'known':>6}  verdict"]
    for r in reports:
        c = r.catalysis
        lines.append(f"{c['task']:<16} {r.d:>2} {_fmt(c['sdp_value']):>12} {_fmt(c['known_achievable_N']):>6}  "
                     f"{c['verdict']} ({c['reason']})")
    return _Outcome([r.to_json() for r in reports], reports, _exit_for(reports), "\n".join(lines) + "\n",
                    reports_csv(reports))


# ---------------------------------------------------------------- derivative-check

def _cmd_derivative_check(args):
    task = _task(args)
    ds = _dims(args)
    for d in ds:
        _check_d(d)
    if not 1e-6 <= args.eps <= 1e-2:
        raise UsageError(f"--eps must lie in [1e-6, 1e-2], got {args.eps}")

    def one(d):
        U0 = _u0(args.u0, d)
        if args.f_expr is not None:
            try:
                expr = dsl.parse(args.f_expr, d, base_dir=Path.cwd())
            except UqcError as exc:
                raise UsageError(str(exc)) from exc
            exact = dsl_derivative(expr, U0)
            target, label = expr, args.f_expr
        else:
            if task.subgroup != "full":
                raise UsageError("derivative-check supports the unrestricted tasks only")
            exact = analytic_derivative(task, U0)
            target, label = task, str(task)
        Je = choi(exact).matrix
        Jf = choi(finite_difference_derivative(target, U0, eps=args.eps)).matrix
        err = float(np.linalg.norm(Je - Jf))
        return {
            "task": label,
            "d": d,
            "method": exact.provenance,
            "eps": args.eps,
            "frobenius_error": round_sig(err),
            "tolerance": DERIVATIVE_TOL,
            "status": "consistent" if err <= DERIVATIVE_TOL else "inconsistent",
        }

    results = _map(one, ds)
    code = EXIT_OK if all(r["status"] == "consistent" for r in results) else EXIT_INCONSISTENT
    lines = [f"{'task':<16} {'d':>2} {'method':<12} {'error':>10}  status"]
    for r in results:
        lines.append(f"{r['task']:<16} {r['d']:>2} {r['method']:<12} {r['frobenius_error']:>10.2e}  {r['status']}")
    buf = ["task,d,method,eps,frobenius_error,status"]
    buf += [f"{r['task']},{r['d']},{r['method']},{r['eps']:.9g},{r['frobenius_error']:.9g},{r['status']}"
            for r in results]
    return _Outcome(results, [], code, "\n".join(lines) + "\n", "\n".join(buf) + "\n")


COMMANDS = {
    "bound": _cmd_bound,
    "prob-curve": _cmd_prob_curve,
    "certify": _cmd_certify,
    "catalysis": _cmd_catalysis,
    "derivative-check": _cmd_derivative_check,
}


def render_json(command: str, results: list) -> str:
    return json.dumps({"schema": SCHEMA_VERSION, "command": command, "results": results}, indent=2) + "\n"


def run(argv=None, stdout=None) -> int:
    """Run the CLI; returns the exit code."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        out = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UqcError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.format == "json":
        stdout.write(render_json(args.command, out.results))
    elif args.format == "csv":
        stdout.write(out.csv)
    else:
        stdout.write(out.text)
    return out.exit_code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
