"""Derivative maps of target functions and their Choi operators.

For ``f: SU(d) -> SU(d)`` the derivative at ``U0`` is the linear map ``g`` on
traceless Hermitian operators with

    f(exp(i eps H) U0) = f(U0) exp(i eps g(H) + O(eps^2)),

and its Choi operator is ``J = sum_j conj(G_j) (x) g(G_j)`` over an
orthonormal basis of su(d).

Derivatives of the DSL primitives (left perturbation in, right perturbation out):

=================  ==========================================
``id``             ``U0^dag H U0``
``inv``            ``-H``
``T``              ``H^T``
``conj``           ``-U0^T conj(H) conj(U0)``
``pow:k`` (k>0)    ``sum_{m=1..k} U0^-m H U0^m``
``pow:k`` (k<0)    ``-sum_{m=0..|k|-1} U0^m H U0^-m``
``lmul:V``         ``U0^dag H U0``
``rmul:V``         ``(U0 V)^dag H (U0 V)``
``sandwich:V``     ``V U0^dag H U0 V^dag``
``a o b``          ``g_a[b(U0)](b(U0) g_b(H) b(U0)^dag)``
``a * b``          ``b(U0)^dag g_a(H) b(U0) + g_b(H)``
=================  ==========================================
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dsl
from .bases import OperatorBasis, gellmann_basis, spans_su
from .errors import DimensionError
from .linalg import (
    INPUT_TOL,
    check_special_unitary,
    check_unitary,
    expm_hermitian,
    mat_log_unitary,
    traceless_hermitian_part,
)
from .tasks import Task, as_task


@dataclass(frozen=True)
class DerivativeMap:
    d: int
    U0: np.ndarray
    evaluator: Callable[[np.ndarray], np.ndarray]
    provenance: str  # "analytic", "chain_rule" or "finite_difference(eps)"
    label: str = ""

    def __call__(self, H) -> np.ndarray:
        return self.evaluator(np.asarray(H, dtype=complex))


@dataclass(frozen=True, eq=False)
class ChoiOperator:
    """Hermitian operator on ``C^d (x) C^d``; slot 1 is the conjugated input leg."""

    matrix: np.ndarray
    d: int
    source: str = ""

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=complex)
        if M.shape != (self.d * self.d, self.d * self.d):
            raise DimensionError(f"Choi operator for d={self.d} must be {self.d ** 2}x{self.d ** 2}, got {M.shape}")
        M = 0.5 * (M + M.conj().T)
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def scaled(self, c: float) -> "ChoiOperator":
        return ChoiOperator(c * self.matrix, self.d, f"{c}*{self.source}")


def _default_U0(U0, d):
    if U0 is None:
        if d is None:
            raise ValueError("either U0 or d is required")
        return np.eye(d, dtype=complex)
    U0 = check_special_unitary(U0, INPUT_TOL, what="U0")
    if d is not None and U0.shape[0] != d:
        raise DimensionError(f"U0 is {U0.shape[0]}-dimensional, expected {d}")
    return U0


def analytic_derivative(task, U0=None, d: int | None = None) -> DerivativeMap:
    """Closed-form derivative of a built-in task (subgroup tasks use inversion)."""
    task = as_task(task)
    U0 = _default_U0(U0, d)
    d = U0.shape[0]
    base = task.base
    if base == "inversion":
        g = lambda H: -H
    elif base == "transposition":
        g = lambda H: H.T.copy()
    elif base == "conjugation":
        Ut, Uc = U0.T, U0.conj()
        g = lambda H: -Ut @ H.conj() @ Uc
    else:
        n = task.order
        powers = [np.linalg.matrix_power(U0, k) for k in range(1, n + 1)]
        g = lambda H: sum(P.conj().T @ H @ P for P in powers)
    return DerivativeMap(d, U0, g, "analytic", str(task))


def _chain(f: dsl.FuncExpr, U0: np.ndarray):
    """Return ``(f(U0), g)`` with ``g`` the derivative of ``f`` at ``U0``."""
    Ud = U0.conj().T
    if isinstance(f, dsl.Identity):
        return U0, lambda H: Ud @ H @ U0
    if isinstance(f, dsl.Inverse):
        return Ud, lambda H: -H
    if isinstance(f, dsl.Transpose):
        return U0.T, lambda H: H.T.copy()
    if isinstance(f, dsl.Conjugate):
        Ut, Uc = U0.T, U0.conj()
        return Uc, lambda H: -Ut @ H.conj() @ Uc
    if isinstance(f, dsl.Power):
        k = abs(f.k)
        P = [np.linalg.matrix_power(U0, m) for m in range(k + 1)]
        if f.k > 0:
            return P[k], lambda H: sum(P[m].conj().T @ H @ P[m] for m in range(1, k + 1))
        return P[k].conj().T, lambda H: -sum(P[m] @ H @ P[m].conj().T for m in range(k))
    if isinstance(f, dsl.LMul):
        V = f.matrix
        return V @ U0, lambda H: Ud @ H @ U0
    if isinstance(f, dsl.RMul):
        W = U0 @ f.matrix
        return W, lambda H: W.conj().T @ H @ W
    if isinstance(f, dsl.Sandwich):
        V = f.matrix
        A = V @ Ud
        return V @ U0 @ V.conj().T, lambda H: A @ H @ A.conj().T
    if isinstance(f, dsl.Compose):
        V0, g_in = _chain(f.inner, U0)
        F0, g_out = _chain(f.outer, V0)
        V0d = V0.conj().T
        return F0, lambda H: g_out(V0 @ g_in(H) @ V0d)
    if isinstance(f, dsl.Product):
        L0, g_l = _chain(f.left, U0)
        R0, g_r = _chain(f.right, U0)
        R0d = R0.conj().T
        return L0 @ R0, lambda H: R0d @ g_l(H) @ R0 + g_r(H)
    raise TypeError(f"not an expression node: {f!r}")


def dsl_derivative(f: dsl.FuncExpr, U0=None, d: int | None = None) -> DerivativeMap:
    """Derivative of a DSL expression by the chain and product rules."""
    U0 = _default_U0(U0, d)
    _, g = _chain(f, U0)
    return DerivativeMap(U0.shape[0], U0, g, "chain_rule", dsl.to_text(f))


def _as_expr(f) -> dsl.FuncExpr:
    if isinstance(f, dsl.FuncExpr):
        return f
    return as_task(f).expr()


def finite_difference_derivative(f, U0=None, eps: float = 1e-4, d: int | None = None,
                                 richardson: bool = True) -> DerivativeMap:
    """Central-difference derivative from matrix logarithms.

    ``g(H) = (K(eps) - K(-eps)) / (2 eps)`` with
    ``K(s) = log(f(U0)^-1 f(exp(isH) U0)) / i``, followed by one Richardson step
    over ``(eps, eps/2)`` unless ``richardson=False``.  Each value is projected
    onto the traceless Hermitian operators.
    """
    if not 1e-6 <= eps <= 1e-2:
        raise ValueError(f"eps must lie in [1e-6, 1e-2], got {eps}")
    expr = _as_expr(f)
    U0 = _default_U0(U0, d)
    F0inv = dsl.evaluate(expr, U0).conj().T

    def K(H, s):
        return mat_log_unitary(F0inv @ dsl.evaluate(expr, expm_hermitian(H, 1j * s) @ U0))

    def central(H, h):
        return (K(H, h) - K(H, -h)) / (2 * h)

    def g(H):
        H = traceless_hermitian_part(H)
        if richardson:
            out = (4 * central(H, eps / 2) - central(H, eps)) / 3
        else:
            out = central(H, eps)
        return traceless_hermitian_part(out)

    return DerivativeMap(U0.shape[0], U0, g, f"finite_difference({eps:g})", dsl.to_text(expr))


def tensor_power_derivative(g: DerivativeMap, n: int) -> DerivativeMap:
    """Derivative of ``F(U_1 (x) ... (x) U_n) = f(U_1) (x) ... (x) f(U_n)`` at ``U0^{(x)n}``.

    Defined on the single-leg subalgebra: each leg's reduced traceless part is
    mapped by ``g`` and re-embedded on that leg.
    """
    from .bases import embed_on_leg

    d = g.d
    D = d**n

    def gF(H):
        T = np.asarray(H).reshape((d,) * (2 * n))
        out = np.zeros((D, D), dtype=complex)
        for leg in range(n):
            # contract every leg except `leg`
            row = list(range(n))
            col = [n + l if l == leg else l for l in range(n)]
            h = np.einsum(T, row + col, [leg, n + leg]) / d ** (n - 1)
            out += embed_on_leg(g(traceless_hermitian_part(h)), leg, d, n)
        return out

    U0 = g.U0
    U0n = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        U0n = np.kron(U0n, U0)
    return DerivativeMap(D, U0n, gF, g.provenance, f"tensor{n}({g.label})")


def choi(g: DerivativeMap, basis: OperatorBasis | None = None) -> ChoiOperator:
    """``J = sum_j conj(G_j) (x) g(G_j)`` over a full orthonormal basis of su(d)."""
    basis = gellmann_basis(g.d) if basis is None else basis
    if not basis.is_su:
        raise ValueError(f"choi needs a full su(d) basis, got tag {basis.tag!r}; use choi_subgroup")
    if basis.dim != g.d:
        raise DimensionError(f"basis is for d={basis.dim}, derivative map for d={g.d}")
    J = sum(np.kron(G.conj(), g(G)) for G in basis)
    return ChoiOperator(J, g.d, g.label)


def choi_subgroup(g: DerivativeMap, sub: OperatorBasis, complement: OperatorBasis):
    """Fixed part ``sum_j conj(G_j) (x) g(G_j)`` over the subalgebra only.

    Returns ``(J_fixed, complement)``; the complement elements index the free
    operators of the subgroup problem.
    """
    if sub.dim != g.d:
        raise DimensionError(f"basis is for d={sub.dim}, derivative map for d={g.d}")
    if not spans_su(sub, complement):
        raise ValueError("subalgebra and complement do not form an orthonormal basis of su(d)")
    D = g.d
    J = np.zeros((D * D, D * D), dtype=complex)
    for G in sub:
        J += np.kron(G.conj(), g(G))
    return ChoiOperator(J, D, f"{g.label}|{sub.tag}"), complement


def task_choi(task, d: int, U0=None) -> ChoiOperator:
    """Analytic Choi operator of a built-in task over the Gell-Mann basis."""
    return choi(analytic_derivative(task, U0, d=d))


def reference_choi(task, d: int, U0=None) -> np.ndarray:
    """Closed forms: ``-|I>><<I| + I/d``, ``SWAP - I/d``,
    ``-(I (x) U0^T)(SWAP - I/d)(I (x) conj(U0))`` and
    ``sum_k (I (x) U0^-k)|I>><<I|(I (x) U0^k) - (n/d) I``."""
    from .linalg import max_entangled, swap

    task = as_task(task)
    U0 = _default_U0(U0, d)
    eye = np.eye(d * d)
    base = task.base
    if base == "inversion":
        return -max_entangled(d) + eye / d
    if base == "transposition":
        return swap(d) - eye / d
    if base == "conjugation":
        L = np.kron(np.eye(d), U0.T)
        return -L @ (swap(d) - eye / d) @ L.conj().T
    n = task.order
    out = -n / d * eye.astype(complex)
    for k in range(1, n + 1):
        P = np.kron(np.eye(d), np.linalg.matrix_power(U0, k))
        out = out + P.conj().T @ max_entangled(d) @ P
    return out
