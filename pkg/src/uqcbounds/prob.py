"""Upper bounds on the success probability of probabilistic exact implementations.

At fixed success probability ``p`` and query count ``N`` the feasibility system is

    J_A - J_B = J + beta (x) I,   Tr beta = N,   Tr J_B = r Tr J_A,   J_A, J_B >= 0

with ``r = (1 - sqrt p)/(1 + sqrt p)``.  Feasibility is monotone in ``p``, so the
largest feasible ``p`` is found by bisection.  Independently, the optimum
follows from ``a = min ||J + beta (x) I||_1`` over ``Tr beta = N`` through
``r_min = (a - Nd)/(a + Nd)`` and ``p = ((1 - r_min)/(1 + r_min))^2``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .bases import gellmann_basis, hermitian_basis
from .linalg import min_eigenvalue, norm
from .sdp.barrier import BarrierOptions, lmi_dual_value, lmi_minimize, repair_lmi_dual
from .sdp.problems import solve_primal
from .tasks import as_task

CLOSED_FORM_TASKS = ("transposition", "inversion", "conjugation")
CURVE_COLUMNS = ("task", "d", "N", "max_p_sdp", "closed_form", "canonical", "trace_norm_path")


@dataclass
class ProbSolution:
    d: int
    N: int
    max_p: float
    J_A: np.ndarray | None
    J_B: np.ndarray | None
    beta: np.ndarray | None
    a_value: float | None  # min trace norm, or Tr(J_A + J_B) of the bisection point
    method: str  # "sdp_bisection", "trace_norm", "closed_form" or "canonical"
    iterations: int = 0
    flags: list = field(default_factory=list)

    @property
    def r(self) -> float:
        s = math.sqrt(self.max_p)
        return (1 - s) / (1 + s)


def ratio_from_p(p: float) -> float:
    s = math.sqrt(p)
    return (1 - s) / (1 + s)


def p_from_ratio(r: float) -> float:
    return ((1 - r) / (1 + r)) ** 2


def _matrix(J):
    J = np.asarray(J, dtype=complex)
    return 0.5 * (J + J.conj().T)


def _dim(J):
    d = int(round(math.sqrt(J.shape[0])))
    if d * d != J.shape[0]:
        raise ValueError(f"J of size {J.shape[0]} is not bipartite")
    return d


def _check_N(N):
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    return int(N)


class _Feasibility:
    """``max t`` s.t. ``J_B - tI >= 0`` and ``J_B + J + beta (x) I - tI >= 0`` at fixed traces.

    Coordinates: traceless parts of beta (Gell-Mann on C^d) and of J_B
    (Gell-Mann on C^d (x) C^d), then ``t``.
    """

    def __init__(self, J, N):
        self.J = J
        self.N = N
        self.d = d = _dim(J)
        D = d * d
        self.Gb = gellmann_basis(d).elements
        self.GB = gellmann_basis(D).elements
        eye_d = np.eye(d)
        eye_D = np.eye(D, dtype=complex)
        nb, nB = len(self.Gb), len(self.GB)
        self.m = nb + nB + 1
        beta_terms = np.array([np.kron(G, eye_d) for G in self.Gb])
        zeros_b = np.zeros((nb, D, D), dtype=complex)
        self.F = [
            np.concatenate([zeros_b, self.GB, -eye_D[None]]),
            np.concatenate([beta_terms, self.GB, -eye_D[None]]),
        ]
        self.c = np.zeros(self.m)
        self.c[-1] = -1.0  # maximize t
        self.trJ = float(np.real(np.trace(J)))

    def trace_B(self, r):
        return r * (self.N * self.d + self.trJ) / (1 - r)

    def solve(self, p, options):
        """Return ``(status, point)`` with status ``feasible``, ``infeasible`` or ``undecided``."""
        d, D = self.d, self.d * self.d
        r = ratio_from_p(p)
        TB = self.trace_B(r)
        JB0 = TB / D * np.eye(D, dtype=complex)
        base = self.J + np.kron(self.N / d * np.eye(d), np.eye(d))
        F0 = [JB0, JB0 + base]
        t0 = min(TB / D, min_eigenvalue(F0[1])) - 1.0
        x0 = np.zeros(self.m)
        x0[-1] = t0
        res = lmi_minimize(self.c, F0, self.F, x0, options, stop=lambda x: x[-1] > 0)
        t = res.x[-1]
        if t > 0:
            return "feasible", self._point(res.x, TB)
        Z = repair_lmi_dual(self.c, self.F, res.Z, [np.eye(D) / (2 * D)] * 2)
        # -dual value bounds max t from above
        upper = -lmi_dual_value(F0, Z)
        if upper < 0:
            return "infeasible", None
        return "undecided", None

    def _point(self, x, TB):
        d, D = self.d, self.d * self.d
        nb = len(self.Gb)
        beta = self.N / d * np.eye(d) + np.tensordot(x[:nb], self.Gb, axes=1)
        JB = TB / D * np.eye(D) + np.tensordot(x[nb:-1], self.GB, axes=1)
        JA = JB + self.J + np.kron(beta, np.eye(d))
        return _matrix(JA), _matrix(JB), _matrix(beta)


def max_success_probability(J, N: int, tol: float = 1e-6, deterministic_value: float | None = None,
                            options: BarrierOptions | None = None) -> ProbSolution:
    """Largest ``p`` (to within ``tol``) for which ``N`` queries can succeed with probability ``p``.

    The returned probability is the lower end of the final bracket, which has a
    certified feasible point; ``J_A``, ``J_B`` and ``beta`` are that point.
    """
    J = _matrix(J)
    N = _check_N(N)
    d = _dim(J)
    if deterministic_value is None:
        deterministic_value = solve_primal(J).primal_value
    if N >= deterministic_value - 1e-7:
        sol = solve_primal(J)
        beta = sol.beta + (N - sol.primal_value) / d * np.eye(d)
        JA = J + np.kron(beta, np.eye(d))
        return ProbSolution(d, N, 1.0, _matrix(JA), np.zeros_like(JA), beta,
                            float(np.real(np.trace(JA))), "sdp_bisection")
    opt = options or BarrierOptions(gap_tol=1e-10)
    prob = _Feasibility(J, N)
    lo, hi = 0.0, 1.0
    point = None
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        status, pt = prob.solve(mid, opt)
        it += 1
        if status == "feasible":
            lo, point = mid, pt
        else:
            hi = mid
    if point is None:
        # p -> 0 is always feasible; certify a tiny positive p
        lo = tol
        status, point = prob.solve(lo, opt)
        if status != "feasible":
            raise RuntimeError("no feasible point found near p = 0")
    JA, JB, beta = point
    return ProbSolution(d, N, lo, JA, JB, beta, float(np.real(np.trace(JA) + np.trace(JB))),
                        "sdp_bisection", it)


def min_trace_norm_path(J, N: int, options: BarrierOptions | None = None) -> ProbSolution:
    """Success probability from ``a = min ||J + beta (x) I||_1`` subject to ``Tr beta = N``.

    Solved as ``minimize 2 Tr Q`` over ``Q >= 0``, ``Q + J + beta (x) I >= 0``;
    then ``a = 2 Tr Q + Tr J + Nd``.
    """
    J = _matrix(J)
    N = _check_N(N)
    d = _dim(J)
    D = d * d
    Gb = gellmann_basis(d).elements
    HQ = hermitian_basis(D)
    nb = len(Gb)
    eye_d = np.eye(d)
    beta_terms = np.array([np.kron(G, eye_d) for G in Gb])
    F = [
        np.concatenate([np.zeros((nb, D, D), dtype=complex), HQ]),
        np.concatenate([beta_terms, HQ]),
    ]
    c = np.concatenate([np.zeros(nb), 2 * np.real(np.einsum("kii->k", HQ))])
    X0 = J + np.kron(N / d * eye_d, eye_d)
    F0 = [np.zeros((D, D), dtype=complex), X0]
    x0 = np.zeros(c.size)
    x0[nb] = (max(0.0, -min_eigenvalue(X0)) + 1.0) * math.sqrt(D)  # HQ[0] = I/sqrt(D)
    res = lmi_minimize(c, F0, F, x0, options or BarrierOptions(gap_tol=1e-10))
    Q = np.tensordot(res.x[nb:], HQ, axes=1)
    beta = N / d * eye_d + np.tensordot(res.x[:nb], Gb, axes=1)
    X = J + np.kron(beta, eye_d)
    a = float(np.real(2 * np.trace(Q) + np.trace(X)))
    Nd = N * d
    r = max(0.0, (a - Nd) / (a + Nd))
    return ProbSolution(d, N, p_from_ratio(r), _matrix(X + Q), _matrix(Q), _matrix(beta), a, "trace_norm",
                        res.iterations)


def closed_form_curve(task, d: int, N: int) -> float:
    """Analytic upper bounds on the success probability, clamped to ``[0, 1]``.

    transposition: ``(d / ((d^2-1)/N + 1))^2``;
    inversion: ``(d^2 / ((2d^2-2)/N + d^2 - 2))^2``;
    conjugation: ``(d / ((d^2-1)/N - 1))^2``, or 1 when the denominator is not positive.
    """
    name = as_task(task).name
    N = _check_N(N)
    if name == "transposition":
        p = (d / ((d * d - 1) / N + 1)) ** 2
    elif name == "inversion":
        p = (d * d / ((2 * d * d - 2) / N + d * d - 2)) ** 2
    elif name == "conjugation":
        den = (d * d - 1) / N - 1
        p = 1.0 if den <= 0 else (d / den) ** 2
    else:
        raise ValueError(f"no closed-form curve for {name!r}; known: {', '.join(CLOSED_FORM_TASKS)}")
    return float(min(1.0, max(0.0, p)))


def conjugation_flags(d: int, N: int) -> list:
    """Informational note: exact conjugation is known to be impossible below d - 1 queries."""
    return ["conjugation_zero_probability_below_d_minus_1"] if N < d - 1 else []


def canonical_bound(J, N: int) -> float:
    """``min(1, (N d ||J||_op / ||J||_F^2)^2)``."""
    J = _matrix(J)
    N = _check_N(N)
    d = _dim(J)
    fro2 = norm(J, "frobenius") ** 2
    if fro2 == 0:
        raise ValueError("canonical bound is undefined for J = 0")
    return float(min(1.0, (N * d * norm(J, "operator") / fro2) ** 2))


@dataclass(frozen=True)
class CurvePoint:
    task: str
    d: int
    N: int
    max_p_sdp: float
    closed_form: float | None
    canonical: float
    trace_norm_path: float

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CURVE_COLUMNS}


def curve_point(task, d: int, N: int, J, deterministic_value: float | None = None) -> CurvePoint:
    name = as_task(task).name
    sdp = max_success_probability(J, N, deterministic_value=deterministic_value).max_p
    cf = closed_form_curve(name, d, N) if name in CLOSED_FORM_TASKS else None
    return CurvePoint(str(as_task(task)), d, N, sdp, cf, canonical_bound(J, N), min_trace_norm_path(J, N).max_p)


def format_number(x) -> str:
    if x is None:
        return ""
    return f"{x:.9g}"


def curve_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_COLUMNS)
    for pt in points:
        w.writerow([format_number(v) if isinstance(v, float) or v is None else v for v in pt.row().values()])
    return buf.getvalue()
