"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed in the terminal
summary (see conftest.py) and when the module is run as a script.
"""
import math
import re
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from uqcbounds.bases import subalgebra_bases, tensor_embedding
from uqcbounds.catalysis import catalysis_verdict, power_map_choi
from uqcbounds.derivative import (
    analytic_derivative,
    choi,
    choi_subgroup,
    finite_difference_derivative,
    task_choi,
    tensor_power_derivative,
)
from uqcbounds.linalg import haar_unitary
from uqcbounds.prob import canonical_bound, closed_form_curve, max_success_probability, min_trace_norm_path
from uqcbounds.registry import lookup, registry_rows, row_violations
from uqcbounds.sdp import (
    dual_feasibility,
    refined_bound,
    solve_dual,
    solve_dual_subgroup,
    solve_primal,
    solve_subgroup,
    verify_certificate,
)
from uqcbounds.tasks import Task

RESULTS = {}
TESTS_DIR = Path(__file__).parent


def _record(number, title, failures, detail=""):
    status = "PASS" if not failures else "FAIL"
    line = f"criterion {number} {status}: {title}"
    if detail:
        line += f" ({detail})"
    if failures:
        line += " -- " + "; ".join(failures[:5])
    RESULTS[number] = line
    print(line)
    assert not failures, line


def _gap_ok(p, q, failures, label):
    lower = max(p.dual_value, q.dual_value)
    gap = p.primal_value - lower
    if not (-1e-9 <= gap <= 1e-6):
        failures.append(f"{label}: gap {gap:.2e}")
    return gap


def test_criterion_1_deterministic_oracle():
    cases = []
    for d in range(2, 6):
        cases += [(Task("inversion"), d, d * d - 1), (Task("transposition"), d, d + 1),
                  (Task("conjugation"), d, d - 1)]
    for d in (2, 3):
        cases += [(Task("iteration", n), d, n) for n in range(1, 6)]
    failures, worst_err, worst_gap = [], 0.0, 0.0
    start = time.perf_counter()
    for task, d, expected in cases:
        J = task_choi(task, d).matrix
        p, q = solve_primal(J), solve_dual(J)
        err = abs(p.primal_value - expected)
        worst_err = max(worst_err, err)
        if err > 1e-5:
            failures.append(f"{task} d={d}: {p.primal_value:.9g} vs {expected}")
        worst_gap = max(worst_gap, _gap_ok(p, q, failures, f"{task} d={d}"))
    elapsed = time.perf_counter() - start
    if elapsed > 60:
        failures.append(f"wall time {elapsed:.1f} s > 60 s")
    _record(1, "deterministic SDP values match closed forms", failures,
            f"{len(cases)} instances, max error {worst_err:.1e}, max gap {worst_gap:.1e}, {elapsed:.1f} s")


def test_criterion_2_refined_registry():
    failures = []
    for d in range(2, 9):
        checks = [("inversion", d * d), ("transposition", 4 if d == 2 else d + 3), ("conjugation", d - 1)]
        for name, expected in checks:
            if refined_bound(name, d).value != expected or lookup(name, d).refined.value != expected:
                failures.append(f"{name} d={d}")
    rows = list(registry_rows())
    for row in rows:
        if row_violations(row):
            failures.append(f"{row.task} d={row.d}: {row_violations(row)}")
        if row.refined is not None and row.refined.value < row.sdp_closed_form:
            failures.append(f"{row.task} d={row.d}: refined below SDP")
    _record(2, "refined bounds and registry consistency", failures, f"{len(rows)} registry rows")


def test_criterion_3_subgroups():
    failures = []
    cases = [("so", d, d - 1) for d in (2, 3, 4)] + [("diag", d, d - 1) for d in range(2, 6)]
    g_inv = {d: analytic_derivative("inversion", d=d) for d in range(2, 6)}
    for kind, d, expected in cases:
        sub, comp = subalgebra_bases(d, kind)
        J = choi_subgroup(g_inv[d], sub, comp)[0].matrix
        p, q = solve_subgroup(J, comp), solve_dual_subgroup(J, comp)
        if abs(p.primal_value - expected) > 1e-5:
            failures.append(f"{kind} d={d}: {p.primal_value:.9g}")
        _gap_ok(p, q, failures, f"{kind} d={d}")
        feas = dual_feasibility(q.gamma, comp)
        if feas["min_eig"] < -1e-9 or feas["marginal"] > 1e-8 or feas["complement"] > 1e-8:
            failures.append(f"{kind} d={d}: dual infeasible {feas}")
    sub, comp = tensor_embedding(2, 2)
    J = choi_subgroup(tensor_power_derivative(g_inv[2], 2), sub, comp)[0].matrix
    p, q = solve_subgroup(J, comp, form="primal"), solve_subgroup(J, comp, form="dual")
    single = solve_primal(task_choi("inversion", 2).matrix).primal_value
    if abs(p.primal_value - 3) > 1e-5 or abs(p.primal_value - single) > 1e-5:
        failures.append(f"tensor: {p.primal_value:.9g} vs single copy {single:.9g}")
    _gap_ok(p, q, failures, "tensor")
    _record(3, "subgroup SDP values", failures, f"{len(cases) + 1} instances")


def test_criterion_4_certificates():
    failures = []
    tasks = ["inversion", "transposition", "conjugation", Task("iteration", 1), Task("iteration", 2),
             Task("iteration", 3), "so_inversion", "diag_inversion"]
    n = 0
    for task in tasks:
        for d in (2, 3, 4):
            cert = verify_certificate(task, d)
            n += 1
            if not (cert.valid and cert.primal_min_eig >= -1e-10
                    and abs(cert.primal_value - cert.dual_value) <= 1e-8):
                failures.append(f"{task} d={d}: {cert.summary()}")
    _record(4, "analytic certificates verify", failures, f"{n} certificates")


def test_criterion_5_probabilistic():
    failures = []
    for d in range(2, 6):
        if abs(closed_form_curve("transposition", d, 1) - 1 / d**2) > 1e-12:
            failures.append(f"transposition closed form d={d}")
    n = 0
    for task in ("transposition", "inversion", "conjugation", Task("iteration", 2)):
        for d in (2, 3):
            J = task_choi(task, d).matrix
            v = solve_primal(J).primal_value
            prev, reached = 0.0, None
            for N in range(1, 7):
                p = max_success_probability(J, N, deterministic_value=v).max_p
                n += 1
                if p < prev - 1e-6:
                    failures.append(f"{task} d={d}: not monotone at N={N}")
                prev = p
                if reached is None and p >= 1 - 1e-6:
                    reached = N
                if p > canonical_bound(J, N) + 1e-6:
                    failures.append(f"{task} d={d} N={N}: canonical bound exceeded")
                if N <= 4:
                    tn = min_trace_norm_path(J, N).max_p
                    if abs(p - tn) > 1e-3:
                        failures.append(f"{task} d={d} N={N}: bisection {p:.6f} vs trace norm {tn:.6f}")
                    name = Task.parse(str(task)).name
                    if name != "iteration" and p > closed_form_curve(name, d, N) + 1e-6:
                        failures.append(f"{task} d={d} N={N}: closed form exceeded")
            if reached is not None and reached != math.ceil(v - 1e-6):
                failures.append(f"{task} d={d}: p reaches 1 at N={reached}, SDP value {v:.6f}")
    _record(5, "probabilistic bounds", failures, f"{n} bisections")


def test_criterion_6_derivatives():
    failures = []
    worst = 0.0
    tasks = ["inversion", "transposition", "conjugation", Task("iteration", 2)]
    for task in tasks:
        for d in (2, 3):
            for seed in range(5):
                U0 = haar_unitary(d, seed=seed)
                err = np.linalg.norm(choi(finite_difference_derivative(task, U0)).matrix
                                     - task_choi(task, d, U0).matrix)
                worst = max(worst, err)
                if err > 1e-6:
                    failures.append(f"{task} d={d} seed={seed}: {err:.2e}")
    # transposition, inversion and conjugation are linear in the matrix logarithm, so their
    # central differences are exact up to rounding; the order is measured where curvature exists
    U0 = haar_unitary(3, seed=1)
    ref = task_choi(Task("iteration", 2), 3, U0).matrix
    errs = [np.linalg.norm(choi(finite_difference_derivative(Task("iteration", 2), U0, eps=eps,
                                                             richardson=False)).matrix - ref)
            for eps in (1e-3, 5e-4)]
    ratio = errs[0] / errs[1]
    if not 3.4 <= ratio <= 4.6:
        failures.append(f"order-2 ratio {ratio:.3f}")
    _record(6, "finite-difference Choi operators", failures,
            f"max error {worst:.1e}, halving ratio {ratio:.3f} for iteration(2) d=3")


def test_criterion_7_catalysis():
    failures = []
    for task in ("conjugation", "transposition", "inversion"):
        for d in (2, 3):
            v = solve_primal(task_choi(task, d).matrix).primal_value
            for n in (2, 3):
                vn = solve_primal(power_map_choi(task, n=n, d=d).matrix).primal_value
                if abs(vn - n * v) > 1e-5:
                    failures.append(f"{task} d={d} n={n}: {vn:.9g} vs {n * v:.9g}")
    verdicts = [(Task("conjugation"), d, "catalysis_ruled_out") for d in (2, 3, 4)]
    verdicts += [(Task("iteration", n), d, "catalysis_ruled_out") for n in (2, 3) for d in (2, 3)]
    for task, d, expected in verdicts:
        got = catalysis_verdict(task, d).verdict
        if got != expected:
            failures.append(f"{task} d={d}: {got}")
    got = catalysis_verdict("inversion", 2, known_achievable_N=4).verdict
    if got != "inconclusive":
        failures.append(f"inversion d=2: {got}")
    _record(7, "catalysis criterion", failures, f"{len(verdicts) + 1} verdicts")


PROPERTY_FILES = ["test_prop_bases.py", "test_prop_sdp.py", "test_prop_linalg.py", "test_prop_dsl.py"]


def test_criterion_8_property_suites():
    failures = []
    counts = {}
    for name in PROPERTY_FILES:
        proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                               "--hypothesis-show-statistics", str(TESTS_DIR / name)],
                              capture_output=True, text=True, cwd=TESTS_DIR.parent)
        if proc.returncode != 0:
            failures.append(f"{name} exited {proc.returncode}")
        blocks = re.split(r"\n(?=\S+::\S+:\n)", proc.stdout)
        for block in blocks:
            head = re.match(r"(\S+::\S+):", block)
            if not head:
                continue
            passing = sum(int(x) for x in re.findall(r"(\d+) passing examples", block))
            failing = sum(int(x) for x in re.findall(r"(\d+) failing examples", block))
            counts[head.group(1)] = passing
            if passing < 200 or failing:
                failures.append(f"{head.group(1)}: {passing} passing, {failing} failing")
    if len(counts) < len(PROPERTY_FILES):
        failures.append(f"only {len(counts)} property tests reported statistics")
    _record(8, "standalone property suites", failures,
            f"{len(counts)} properties, min {min(counts.values(), default=0)} cases each")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
