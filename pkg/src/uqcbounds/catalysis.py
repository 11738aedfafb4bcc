"""Tightness test that excludes optimal catalytic protocols.

If ``f(U0) = I``, the derivative of ``U -> f(U)^n`` at ``U0`` is ``n`` times the
derivative of ``f``, so its SDP value is ``n`` times larger.  When the SDP value
``N`` for ``f`` is achieved by a known protocol, a catalytic protocol producing
``f(U)^n`` with fewer than ``nN`` queries would contradict the bound, and an
optimal protocol for ``f`` cannot be catalytic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dsl
from .bases import subalgebra_bases
from .derivative import ChoiOperator, analytic_derivative, choi, choi_subgroup, dsl_derivative
from .errors import BasePointError
from .sdp.problems import solve_primal, solve_subgroup
from .tasks import Task, as_task

BASE_POINT_TOL = 1e-8
TIGHTNESS_TOL = 1e-5
SCALING_TOL = 1e-5
PRODUCT_ORACLE_TOL = 1e-7


@dataclass
class CatalysisVerdict:
    task: str
    d: int
    sdp_value: float
    known_achievable_N: int | None
    scaling_check: list = field(default_factory=list)  # [{"n": n, "measured_ratio": r}]
    verdict: str = "inconclusive"  # or "catalysis_ruled_out"
    base_point_error: float = 0.0
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "d": self.d,
            "sdp_value": self.sdp_value,
            "known_achievable_N": self.known_achievable_N,
            "scaling_check": [dict(s) for s in self.scaling_check],
            "verdict": self.verdict,
            "base_point_error": self.base_point_error,
            "reason": self.reason,
        }


def _expr(f):
    if isinstance(f, dsl.FuncExpr):
        return f, None
    task = as_task(f)
    return task.expr(), task


def base_point_error(f, U0) -> float:
    """``||f(U0) - I||_F``."""
    expr, _ = _expr(f)
    F0 = dsl.evaluate(expr, U0)
    return float(np.linalg.norm(F0 - np.eye(F0.shape[0])))


def power_map_choi(f, U0=None, n: int = 2, d: int | None = None) -> ChoiOperator:
    """Choi operator of ``U -> f(U)^n`` at a base point with ``f(U0) = I``.

    Computed as ``n`` times the Choi operator of ``f`` and checked against the
    chain/product-rule derivative of the explicit product ``f * ... * f``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if U0 is None:
        if d is None:
            raise ValueError("either U0 or d is required")
        U0 = np.eye(d, dtype=complex)
    U0 = np.asarray(U0, dtype=complex)
    expr, task = _expr(f)
    err = base_point_error(expr, U0)
    if err > BASE_POINT_TOL:
        raise BasePointError(f"base-point condition f(U0) = I fails: ||f(U0) - I|| = {err:.3e}")
    base = choi(analytic_derivative(task, U0) if task is not None and task.subgroup == "full"
                else dsl_derivative(expr, U0))
    J = base.scaled(n)
    oracle = choi(dsl_derivative(dsl.power_product(expr, n), U0)).matrix
    dev = float(np.linalg.norm(oracle - J.matrix))
    if dev > PRODUCT_ORACLE_TOL:
        raise ArithmeticError(f"n-fold product derivative deviates from n*J by {dev:.3e}")
    return ChoiOperator(J.matrix, J.d, f"{n}*{base.source}")


def _solve_value(task: Task, J):
    if task.subgroup == "full":
        return solve_primal(J).primal_value
    _, comp = subalgebra_bases(int(round(np.sqrt(J.shape[0]))), task.subgroup)
    return solve_subgroup(J, comp).primal_value


def _task_choi(task: Task, d: int, U0):
    g = analytic_derivative(task, U0 if task.subgroup == "full" else None, d=d)
    if task.subgroup == "full":
        return choi(g).matrix
    sub, comp = subalgebra_bases(d, task.subgroup)
    return choi_subgroup(g, sub, comp)[0].matrix


def default_known(task, d: int) -> int | None:
    """Concrete best-known achievable query count from the registry, if any."""
    from .registry import lookup

    best = lookup(task, d).best_known
    return best.value if best is not None else None


def catalysis_verdict(task, d: int, known_achievable_N: int | None = "registry", U0=None,
                      ns=(2, 3)) -> CatalysisVerdict:
    """Decide whether SDP tightness rules out an optimal catalytic protocol.

    ``known_achievable_N`` defaults to the registry value; pass ``None`` for no
    known protocol.  The base point is the identity unless ``U0`` is given.
    """
    task = as_task(task)
    if known_achievable_N == "registry":
        known_achievable_N = default_known(task, d)
    U0 = np.eye(d, dtype=complex) if U0 is None else np.asarray(U0, dtype=complex)
    err = base_point_error(task, U0)
    J = _task_choi(task, d, U0)
    value = _solve_value(task, J)
    checks = []
    scaling_ok = True
    for n in ns:
        Jn = n * J
        if task.subgroup == "full" and err <= BASE_POINT_TOL:
            Jn = power_map_choi(task, U0, n).matrix
        ratio = _solve_value(task, Jn) / value if value != 0 else float("nan")
        checks.append({"n": int(n), "measured_ratio": float(ratio)})
        scaling_ok &= bool(abs(ratio - n) <= SCALING_TOL * max(1.0, n))
    tight = known_achievable_N is not None and abs(value - known_achievable_N) <= TIGHTNESS_TOL
    if err > BASE_POINT_TOL:
        verdict, reason = "inconclusive", f"f(U0) != I (||f(U0) - I|| = {err:.3e})"
    elif not scaling_ok:
        verdict, reason = "inconclusive", "SDP value does not scale with n"
    elif known_achievable_N is None:
        verdict, reason = "inconclusive", "no known achievable query count"
    elif not tight:
        verdict, reason = "inconclusive", f"SDP value {value:.9g} is not tight against {known_achievable_N}"
    else:
        verdict, reason = "catalysis_ruled_out", "SDP value is achieved and f(U0) = I"
    return CatalysisVerdict(str(task), d, value, known_achievable_N, checks, verdict, err, reason)
