"""Closed-form optimal points for the built-in tasks, checked numerically.

Each certificate pairs an analytic primal point (beta, and the free operators
for the SO(d) promise) with an analytic dual witness Gamma.  Feasibility of both
plus equal objective values proves the claimed optimum without any solver.

=================  ==========================  =====================================
task               beta                         Gamma (normalized, Tr_2 Gamma = I)
=================  ==========================  =====================================
inversion          ((d^2-1)/d) I                |I>><<I|
transposition      ((d+1)/d) I                  2 Pi_antisym / (d-1)
conjugation        ((d-1)/d) I                  (2/(d+1)) (I (x) U0^T) Pi_sym (I (x) conj U0)
iteration(n)       (n/d) I                      (I - sum_j |conj(v_j) v_j><...|) / (d-1)
so_inversion       ((d-1)/d) I  (+ free terms)  (2 Pi_antisym + |I>><<I|) / d
diag_inversion     ((d-1)/d) I                  sum_j |jj><jj|
=================  ==========================  =====================================

Here ``v_j`` is an orthonormal eigenbasis of ``U0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..bases import OperatorBasis, subalgebra_bases
from ..derivative import analytic_derivative, choi, choi_subgroup
from ..linalg import antisym_projector, max_entangled, min_eigenvalue, partial_trace, sym_projector
from ..tasks import Task, as_task

PRIMAL_TOL = 1e-10
DUAL_PSD_TOL = 1e-10
DUAL_EQ_TOL = 1e-8
VALUE_TOL = 1e-8


@dataclass
class Certificate:
    task: Task
    d: int
    claimed_value: float
    primal_point: np.ndarray  # beta
    dual_witness: np.ndarray  # Gamma
    primal_feasible: bool
    dual_feasible: bool
    values_match: bool
    primal_value: float = 0.0
    dual_value: float = 0.0
    primal_min_eig: float = 0.0
    dual_min_eig: float = 0.0
    dual_residual: float = 0.0
    free_terms: list = field(default_factory=list)  # (B_k, B'_k) pairs
    parameters: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return self.primal_feasible and self.dual_feasible and self.values_match

    def summary(self) -> dict:
        return {
            "task": str(self.task),
            "d": self.d,
            "claimed_value": self.claimed_value,
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "primal_min_eig": self.primal_min_eig,
            "dual_min_eig": self.dual_min_eig,
            "dual_residual": self.dual_residual,
            "primal_feasible": self.primal_feasible,
            "dual_feasible": self.dual_feasible,
            "values_match": self.values_match,
            "parameters": dict(self.parameters),
        }


def closed_form_value(task, d: int) -> float:
    """Optimal value of the (subgroup) SDP for a built-in task."""
    task = as_task(task)
    return {
        "inversion": d * d - 1,
        "transposition": d + 1,
        "conjugation": d - 1,
        "iteration": task.order,
        "so_inversion": d - 1,
        "diag_inversion": d - 1,
    }[task.name]


def _unit(d, j, k):
    E = np.zeros((d, d), dtype=complex)
    E[j, k] = 1
    return E


def so_free_terms(d: int):
    """Pairs ``(B_k, B'_k)`` of the SO(d) certificate in unnormalized form.

    ``B_{j1 j2} = |j1><j2| + |j2><j1|`` pairs with ``a B_{j1 j2}``, and
    ``B_j = |j><j| - I/d`` with ``2a B_j``, where ``a = (d-2)/(2(d+2))``.
    """
    a = (d - 2) / (2 * (d + 2))
    pairs = []
    for j1 in range(d):
        for j2 in range(j1 + 1, d):
            B = _unit(d, j1, j2) + _unit(d, j2, j1)
            pairs.append((B, a * B))
    for j in range(d):
        B = _unit(d, j, j) - np.eye(d) / d
        pairs.append((B, 2 * a * B))
    return pairs


def eigenbasis(U) -> np.ndarray:
    """Orthonormal eigenvectors (columns) of a normal matrix via the complex Schur form."""
    _, Z = scipy.linalg.schur(np.asarray(U, dtype=complex), output="complex")
    return Z


def _witness(task: Task, d: int, U0):
    eye = np.eye(d * d, dtype=complex)
    name = task.name
    if name in ("inversion",):
        return max_entangled(d).astype(complex)
    if name == "transposition":
        return 2 * antisym_projector(d) / (d - 1)
    if name == "conjugation":
        L = np.kron(np.eye(d), U0.T)
        return 2 / (d + 1) * L @ sym_projector(d) @ L.conj().T
    if name == "iteration":
        V = eigenbasis(U0)
        P = eye.copy()
        for j in range(d):
            w = np.kron(V[:, j].conj(), V[:, j])
            P -= np.outer(w, w.conj())
        return P / (d - 1)
    if name == "so_inversion":
        return (2 * antisym_projector(d) + max_entangled(d)) / d
    if name == "diag_inversion":
        G = np.zeros((d * d, d * d), dtype=complex)
        for j in range(d):
            G[j * d + j, j * d + j] = 1
        return G
    raise ValueError(name)


def _beta(task: Task, d: int) -> np.ndarray:
    value = closed_form_value(task, d)
    return value / d * np.eye(d, dtype=complex)


def verify_certificate(task, d: int, U0=None) -> Certificate:
    """Build and check the analytic primal point and dual witness of ``task``.

    ``U0`` matters for conjugation and iteration (identity by default); the
    subgroup tasks are certified at the identity.
    """
    task = as_task(task)
    if d < 2:
        raise ValueError(f"d must be at least 2, got {d}")
    U0 = np.eye(d, dtype=complex) if U0 is None else np.asarray(U0, dtype=complex)
    g = analytic_derivative(task, U0 if task.subgroup == "full" else None, d=d)
    free_terms = []
    complement: OperatorBasis | None = None
    params = {}
    if task.subgroup == "full":
        J = choi(g).matrix
    else:
        sub, complement = subalgebra_bases(d, task.subgroup)
        J = choi_subgroup(g, sub, complement)[0].matrix
        if task.subgroup == "so":
            free_terms = so_free_terms(d)
            params = {"a": (d - 2) / (2 * (d + 2)), "b": (d - 1) / d}
    beta = _beta(task, d)
    M = J + np.kron(beta, np.eye(d))
    for B, Bp in free_terms:
        M = M + np.kron(B.conj(), Bp)
    primal_min = min_eigenvalue(M)
    primal_value = float(np.real(np.trace(beta)))

    gamma = _witness(task, d, U0)
    dual_min = min_eigenvalue(gamma)
    resid = float(np.max(np.abs(partial_trace(gamma, 2, d) - np.eye(d))))
    if complement is not None:
        for B in complement:
            R = partial_trace(np.kron(B.conj(), np.eye(d)) @ gamma, 1, d)
            resid = max(resid, float(np.max(np.abs(R))))
    dual_value = -float(np.real(np.vdot(J, gamma)))

    primal_ok = primal_min >= -PRIMAL_TOL
    dual_ok = dual_min >= -DUAL_PSD_TOL and resid <= DUAL_EQ_TOL
    match = primal_ok and dual_ok and abs(primal_value - dual_value) <= VALUE_TOL
    return Certificate(task, d, float(closed_form_value(task, d)), beta, gamma, primal_ok, dual_ok, match,
                       primal_value, dual_value, primal_min, dual_min, resid, free_terms, params)


@dataclass(frozen=True)
class RefinedBound:
    value: int
    provenance: str = "analytic (not an SDP output)"
    intermediate: float | None = None  # sharper real bound behind the integer, when known


def refined_bound(task, d: int) -> RefinedBound | None:
    """Integer lower bounds that sharpen the SDP value via a Haar-average argument.

    Inversion ``d^2``; transposition ``4`` at ``d = 2`` and ``d + 3`` beyond (the
    argument gives ``d + 3 - d/(2(d-1))``, which exceeds ``d + 2``);
    conjugation ``d - 1``.  Other tasks have none.
    """
    task = as_task(task)
    if task.name == "inversion":
        return RefinedBound(d * d)
    if task.name == "transposition":
        if d == 2:
            return RefinedBound(4)
        return RefinedBound(d + 3, intermediate=d + 3 - d / (2 * (d - 1)))
    if task.name == "conjugation":
        return RefinedBound(d - 1)
    return None
