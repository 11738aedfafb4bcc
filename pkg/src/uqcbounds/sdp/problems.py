"""The deterministic query-complexity SDP, its subgroup relaxation, and their duals.

Primal::

    minimize Tr(beta)  s.t.  J + sum_k conj(B_k) (x) B'_k + beta (x) I >= 0

over Hermitian ``beta`` and traceless Hermitian ``B'_k`` (one per complement
element ``B_k``; no complement gives the unrestricted problem).

Dual::

    maximize -Tr(J Gamma)  s.t.  Gamma >= 0,  Tr_2 Gamma = I,
                                 Tr_1[(conj(B_k) (x) I) Gamma] = 0.

``solve_primal``/``solve_subgroup`` run the barrier method on the primal
coordinates and recover Gamma from the barrier gradient; ``solve_dual``/
``solve_dual_subgroup`` run it on Gamma directly, parametrized over the
solution set of its equality constraints, and recover beta from the barrier
dual.  Either way both returned points are repaired to be
exactly feasible, so ``dual_value <= optimum <= primal_value`` holds rigorously
up to eigenvalue round-off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..bases import OperatorBasis, gellmann_basis, hermitian_basis
from ..linalg import matrix_to_json, min_eigenvalue, partial_trace
from .barrier import BarrierOptions, lmi_dual_value, lmi_minimize, null_space_hermitian, repair_lmi_dual

GAP_ACCEPT = 1e-6
SHORT_CIRCUIT_TOL = 1e-14


@dataclass
class SdpSolution:
    primal_value: float
    beta: np.ndarray
    dual_value: float
    gamma: np.ndarray
    status: str  # "optimal", "infeasible" or "max_iter"
    free_complement: list | None = None
    method: str = "primal"
    iterations: int = 0
    min_eig: float = 0.0  # lambda_min(J~ + beta (x) I) at the returned beta

    @property
    def gap(self) -> float:
        return self.primal_value - self.dual_value

    @property
    def d(self) -> int:
        return self.beta.shape[0]

    def to_dict(self, include_matrices: bool = True) -> dict:
        out = {
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "status": self.status,
        }
        if include_matrices:
            out["beta"] = matrix_to_json(self.beta)
            out["gamma"] = matrix_to_json(self.gamma)
        return out


def query_lower_bound(value: float, slack: float = 1e-6) -> int:
    """Integer query bound implied by a real SDP value."""
    return int(math.ceil(value - slack))


def _as_matrix(J) -> np.ndarray:
    J = np.asarray(J, dtype=complex)
    return 0.5 * (J + J.conj().T)


def _hermitize(M):
    return 0.5 * (M + M.conj().T)


def _local_dim(J) -> int:
    d = int(round(math.sqrt(J.shape[0])))
    if d * d != J.shape[0]:
        raise ValueError(f"J of size {J.shape[0]} is not bipartite")
    return d


def _complement_terms(complement: OperatorBasis | None, d: int):
    """Coefficient matrices ``conj(B_k) (x) F_l`` for the free operators, and the
    traceless basis ``F_l`` used to expand each ``B'_k``."""
    if complement is None or len(complement) == 0:
        return np.zeros((0, d * d, d * d), dtype=complex), None
    if complement.dim != d:
        raise ValueError(f"complement basis is for dimension {complement.dim}, J for {d}")
    Fl = gellmann_basis(d).elements
    terms = np.array([np.kron(B.conj(), F) for B in complement for F in Fl])
    return terms, Fl


def _beta_terms(d: int):
    E = hermitian_basis(d)
    eye = np.eye(d)
    return E, np.array([np.kron(e, eye) for e in E]), np.real(np.einsum("kii->k", E))


def _assemble(J, d, E, Fl, complement, x):
    nb = E.shape[0]
    beta = np.tensordot(x[:nb], E, axes=1)
    free = None
    if Fl is not None:
        coeffs = x[nb:].reshape(len(complement), Fl.shape[0])
        free = [np.tensordot(ck, Fl, axes=1) for ck in coeffs]
    return 0.5 * (beta + beta.conj().T), free


def _constraint_operator(J, beta, free, complement):
    d = beta.shape[0]
    M = J + np.kron(beta, np.eye(d))
    if free is not None:
        for B, Bp in zip(complement, free):
            M = M + np.kron(B.conj(), Bp)
    return M


def _status(gap, run_status):
    # a certified small gap is optimal whatever the iteration log says
    return "optimal" if gap <= GAP_ACCEPT else "max_iter"


def _zero_solution(d, complement, method):
    free = None if complement is None or len(complement) == 0 else [np.zeros((d, d), complex) for _ in complement]
    return SdpSolution(0.0, np.zeros((d, d), complex), 0.0, np.eye(d * d, dtype=complex) / d, "optimal",
                       free, method, 0, 0.0)


def _solve_primal_form(J, complement, options, method):
    J = _as_matrix(J)
    d = _local_dim(J)
    if np.max(np.abs(J)) <= SHORT_CIRCUIT_TOL:
        return _zero_solution(d, complement, method)
    E, beta_F, beta_c = _beta_terms(d)
    comp_F, Fl = _complement_terms(complement, d)
    F = np.concatenate([beta_F, comp_F]) if comp_F.shape[0] else beta_F
    c = np.concatenate([beta_c, np.zeros(comp_F.shape[0])])
    s = max(0.0, -min_eigenvalue(J)) + 1.0
    x0 = np.zeros(c.size)
    x0[0] = s * math.sqrt(d)  # E[0] = I / sqrt(d)
    res = lmi_minimize(c, [J], [F], x0, options or BarrierOptions())
    beta, free = _assemble(J, d, E, Fl, complement, res.x)
    interior = [np.eye(d * d, dtype=complex) / d]
    Z = repair_lmi_dual(c, [F], res.Z, interior)
    gamma = Z[0]
    primal = float(np.real(np.trace(beta)))
    dual = lmi_dual_value([J], [gamma])
    lam = min_eigenvalue(_constraint_operator(J, beta, free, complement))
    return SdpSolution(primal, beta, dual, gamma, _status(primal - dual, res.status), free, method,
                       res.iterations, lam)


def _solve_dual_form(J, complement, options, method):
    J = _as_matrix(J)
    d = _local_dim(J)
    if np.max(np.abs(J)) <= SHORT_CIRCUIT_TOL:
        return _zero_solution(d, complement, method)
    E, beta_F, beta_c = _beta_terms(d)
    comp_F, Fl = _complement_terms(complement, d)
    A = np.concatenate([beta_F, comp_F]) if comp_F.shape[0] else beta_F
    # Gamma = I/d + sum_k z_k N_k runs over the affine set cut out by the equalities
    gamma0 = np.eye(d * d, dtype=complex) / d
    N = null_space_hermitian(A)
    c = np.real(np.einsum("kij,ji->k", N, J))
    res = lmi_minimize(c, [gamma0], [N], np.zeros(c.size), options or BarrierOptions())
    gamma = _hermitize(gamma0 + np.tensordot(res.x, N, axes=1))
    dual = -float(np.real(np.vdot(J, gamma)))
    # the barrier dual S >= 0 satisfies S - J in span(A), i.e. S = J + beta (x) I + sum conj(B_k) (x) B'_k
    S = repair_lmi_dual(c, [N], res.Z)[0]
    V = A.reshape(A.shape[0], -1)
    u = np.linalg.lstsq(np.concatenate([V.real, V.imag], axis=1).T,
                        np.concatenate([(S - J).ravel().real, (S - J).ravel().imag]), rcond=None)[0]
    beta, free = _assemble(J, d, E, Fl, complement, u)
    lam = min_eigenvalue(_constraint_operator(J, beta, free, complement))
    if lam < 0:
        beta = beta + (-lam) * np.eye(d)
        lam = min_eigenvalue(_constraint_operator(J, beta, free, complement))
    primal = float(np.real(np.trace(beta)))
    return SdpSolution(primal, beta, dual, gamma, _status(primal - dual, res.status), free, method,
                       res.iterations, lam)


def solve_primal(J, options: BarrierOptions | None = None) -> SdpSolution:
    """Minimize ``Tr(beta)`` subject to ``J + beta (x) I >= 0``."""
    return _solve_primal_form(J, None, options, "primal")


def solve_dual(J, options: BarrierOptions | None = None) -> SdpSolution:
    """Maximize ``-Tr(J Gamma)`` over ``Gamma >= 0``, ``Tr_2 Gamma = I``."""
    return _solve_dual_form(J, None, options, "dual")


def form_sizes(d: int, complement: OperatorBasis | None = None) -> tuple:
    """Number of real coordinates of the (primal, dual) barrier problems at local dimension ``d``."""
    k = 0 if complement is None else len(complement)
    primal = (d * d - 1) * (1 + k)
    dual = d**4 - d * d - k * d * d
    return primal, dual


def solve_subgroup(J_fixed, complement: OperatorBasis, options: BarrierOptions | None = None,
                   form: str = "auto") -> SdpSolution:
    """Subgroup-restricted primal with free traceless ``B'_k`` for each complement element.

    The free operators add many coordinates; when the dual parametrization is
    smaller, the problem is solved in dual form and the primal point recovered
    from the barrier multiplier (``method == "dual"``).  ``form`` forces
    ``"primal"`` or ``"dual"``.
    """
    if form not in ("auto", "primal", "dual"):
        raise ValueError(f"form must be auto, primal or dual, got {form!r}")
    J = _as_matrix(J_fixed)
    n_primal, n_dual = form_sizes(_local_dim(J), complement)
    if form == "dual" or (form == "auto" and n_dual < n_primal):
        return _solve_dual_form(J, complement, options, "dual")
    return _solve_primal_form(J, complement, options, "primal")


def solve_dual_subgroup(J_fixed, complement: OperatorBasis, options: BarrierOptions | None = None) -> SdpSolution:
    """Subgroup dual: adds ``Tr_1[(conj(B_k) (x) I) Gamma] = 0`` for each complement element."""
    return _solve_dual_form(J_fixed, complement, options, "dual")


def dual_feasibility(gamma, complement: OperatorBasis | None = None) -> dict:
    """Residuals of the dual constraints at ``gamma``."""
    gamma = np.asarray(gamma)
    d = _local_dim(gamma)
    out = {
        "min_eig": min_eigenvalue(gamma),
        "marginal": float(np.max(np.abs(partial_trace(gamma, 2, d) - np.eye(d)))),
        "complement": 0.0,
    }
    if complement is not None:
        for B in complement:
            R = partial_trace(np.kron(B.conj(), np.eye(d)) @ gamma, 1, d)
            out["complement"] = max(out["complement"], float(np.max(np.abs(R))))
    return out
