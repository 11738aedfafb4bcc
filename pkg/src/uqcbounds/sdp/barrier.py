"""Log-det barrier methods for small dense complex SDPs.

Problems have the inequality (LMI) form::

    minimize  c.x   s.t.  S_b(x) = F0_b + sum_i x_i F_bi  >= 0   for each block b

with the dual ``maximize -sum_b Tr(F0_b Z_b)  s.t.  sum_b Tr(F_bi Z_b) = c_i, Z_b >= 0``.
An equality-constrained problem over a PSD matrix is brought to this form by
parametrizing its affine feasible set (see ``null_space_hermitian``).

The method follows the central path from a strictly feasible start with damped
Newton steps; the dual point is read off the barrier gradient at the last centre.
All matrices are complex Hermitian; no real embedding is needed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

log = logging.getLogger(__name__)


@dataclass
class BarrierOptions:
    gap_tol: float = 1e-9  # stop once (matrix size)/t falls below this
    t0: float = 1.0
    mu: float = 20.0
    newton_tol: float = 1e-11  # on half the squared Newton decrement
    stall_tol: float = 1e-6  # below this decrement, stop centring once progress stalls
    max_iter: int = 500  # total Newton steps
    alpha: float = 0.01
    beta: float = 0.5


@dataclass
class LmiResult:
    x: np.ndarray
    Z: list  # dual blocks
    value: float  # c.x at the final iterate (strictly feasible)
    gap_estimate: float
    iterations: int
    status: str  # "optimal", "max_iter" or "stopped"
    slack: list = field(default_factory=list)


def _chol(S):
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return None


def _solve_spd(H, g):
    try:
        cf = scipy.linalg.cho_factor(H, check_finite=False)
        return scipy.linalg.cho_solve(cf, g, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        return np.linalg.lstsq(H, g, rcond=None)[0]


def _congruence(L, B):
    """``L @ B[k] @ L^H`` for a stack ``B`` of shape ``(m, n, n)``, as two large products."""
    m, n, _ = B.shape
    X = (B.reshape(m * n, n) @ L.conj().T).reshape(m, n, n)
    return (L @ X.transpose(1, 0, 2).reshape(n, m * n)).reshape(n, m, n).transpose(1, 0, 2)


def _trace_products(B, W):
    """Real matrix ``Re Tr(B_k W_l)`` for two stacks of square matrices."""
    return np.real(B.reshape(B.shape[0], -1) @ np.swapaxes(W, 1, 2).reshape(W.shape[0], -1).T)


def hermitian_coords(X) -> np.ndarray:
    """Real coordinates of Hermitian matrices (diagonal, then scaled Re/Im of the
    strict upper triangle), so that ``Tr(A B) = coords(A) . coords(B)``."""
    X = np.asarray(X)
    n = X.shape[-1]
    iu = np.triu_indices(n, 1)
    idx = np.arange(n)
    up = X[..., iu[0], iu[1]]
    r2 = np.sqrt(2.0)
    return np.concatenate([X[..., idx, idx].real, r2 * up.real, r2 * up.imag], axis=-1)


def _stalled(dec, prev, opt):
    # round-off floor: the decrement no longer contracts
    return dec < opt.stall_tol and dec > 0.5 * prev


def _herm(M):
    return 0.5 * (M + np.swapaxes(M, -1, -2).conj())


class _Lmi:
    def __init__(self, c, F0, F):
        self.c = np.asarray(c, dtype=float)
        self.F0 = [np.asarray(B, dtype=complex) for B in F0]
        self.F = [np.asarray(B, dtype=complex) for B in F]
        self.m = self.c.size
        for B0, B in zip(self.F0, self.F):
            if B.shape != (self.m,) + B0.shape:
                raise ValueError(f"block coefficient shape {B.shape} does not match {(self.m,) + B0.shape}")
        self.size = sum(B.shape[0] for B in self.F0)

    def slack(self, x):
        return [B0 + np.tensordot(x, B, axes=1) for B0, B in zip(self.F0, self.F)]

    def factor(self, x):
        Ls = []
        for S in self.slack(x):
            L = _chol(_herm(S))
            if L is None:
                return None
            Ls.append(L)
        return Ls

    def phi(self, x, t, Ls):
        logdet = sum(2.0 * np.sum(np.log(np.real(np.diag(L)))) for L in Ls)
        return t * self.c @ x - logdet

    def derivatives(self, Ls):
        grad = np.zeros(self.m)
        hess = np.zeros((self.m, self.m))
        for L, B in zip(Ls, self.F):
            Li = scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)
            Bt = _congruence(Li, B)  # Li B_k Li^H for every k
            grad += np.real(np.einsum("kii->k", Bt))
            V = hermitian_coords(Bt)
            hess += V @ V.T
        return grad, hess


def lmi_minimize(c, F0, F, x0, options: BarrierOptions | None = None, stop=None) -> LmiResult:
    """Minimize ``c.x`` over ``F0_b + sum_i x_i F_bi >= 0`` from a strictly feasible ``x0``.

    ``F0`` is a list of Hermitian blocks, ``F`` a matching list of arrays of
    shape ``(m, n_b, n_b)``.  ``stop(x)`` may end the run early (status
    ``"stopped"``), e.g. once a feasibility certificate is found.
    """
    opt = options or BarrierOptions()
    P = _Lmi(c, F0, F)
    x = np.asarray(x0, dtype=float).copy()
    Ls = P.factor(x)
    if Ls is None:
        raise ValueError("starting point is not strictly feasible")
    t = opt.t0
    iters = 0
    status = "max_iter"
    while True:
        # centring
        prev = np.inf
        while iters < opt.max_iter:
            g_bar, H = P.derivatives(Ls)
            grad = t * P.c - g_bar
            dx = -_solve_spd(H, grad)
            dec = -grad @ dx
            if dec / 2 <= opt.newton_tol or _stalled(dec, prev, opt):
                break
            prev = dec
            f0 = P.phi(x, t, Ls)
            s = 1.0
            while True:
                xn = x + s * dx
                Ln = P.factor(xn)
                if Ln is not None and P.phi(xn, t, Ln) <= f0 - opt.alpha * s * dec:
                    break
                s *= opt.beta
                if s < 1e-14:
                    Ln = None
                    break
            iters += 1
            if Ln is None:
                break
            x, Ls = xn, Ln
            if stop is not None and stop(x):
                status = "stopped"
                break
        if status == "stopped" or iters >= opt.max_iter:
            break
        if P.size / t < opt.gap_tol:
            status = "optimal"
            break
        t *= opt.mu
    Z = []
    for L in Ls:
        Li = scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)
        Z.append(_herm(Li.conj().T @ Li) / t)
    log.debug("lmi_minimize: %s after %d Newton steps, t=%.3g", status, iters, t)
    return LmiResult(x, Z, float(P.c @ x), P.size / t, iters, status, P.slack(x))


def lmi_dual_value(F0, Z) -> float:
    return float(-sum(np.real(np.vdot(B0, Zb)) for B0, Zb in zip(F0, Z)))


def lmi_dual_residual(c, F, Z) -> np.ndarray:
    return np.asarray(c, dtype=float) - sum(np.real(np.einsum("kij,ji->k", B, Zb)) for B, Zb in zip(F, Z))


def repair_lmi_dual(c, F, Z, Z_interior=None, steps: int = 3):
    """Make ``Z`` exactly satisfy ``sum_b Tr(F_bi Z_b) = c_i`` and stay PSD.

    First applies corrections ``Z_b F_b(w) Z_b`` in the metric of ``Z`` itself,
    which keep positivity for the small residuals left by a centred barrier
    iterate.  Any remaining residual is removed by the Euclidean least-norm
    correction, and if that breaks positivity a strictly feasible
    ``Z_interior`` is mixed in.
    """
    c = np.asarray(c, dtype=float)
    m = c.size
    Z = [_herm(np.asarray(Zb, dtype=complex)) for Zb in Z]
    for _ in range(steps):
        r = lmi_dual_residual(c, F, Z)
        if not np.any(r):
            break
        W = [_congruence(Zb, B) for Zb, B in zip(Z, F)]  # Z is Hermitian
        M = sum(_trace_products(B, Wb) for B, Wb in zip(F, W))
        w = np.linalg.lstsq(M, r, rcond=1e-14)[0]
        Zn = [_herm(Zb + np.tensordot(w, Wb, axes=1)) for Zb, Wb in zip(Z, W)]
        if min(np.linalg.eigvalsh(Zb)[0] for Zb in Zn) < 0:
            break
        Z = Zn
    G = np.zeros((m, m))
    for B in F:
        V = B.reshape(m, -1)
        G += np.real(V.conj() @ V.T)
    r = lmi_dual_residual(c, F, Z)
    w = np.linalg.lstsq(G, r, rcond=None)[0]
    Zp = [_herm(Zb + np.tensordot(w, B, axes=1)) for Zb, B in zip(Z, F)]
    if Z_interior is None:
        return Zp
    dip = min(np.linalg.eigvalsh(Zb)[0] for Zb in Zp)
    if dip >= 0:
        return Zp
    floor = min(np.linalg.eigvalsh(_herm(Zb))[0] for Zb in Z_interior)
    theta = -dip / (floor - dip)
    return [(1 - theta) * Zb + theta * Zi for Zb, Zi in zip(Zp, Z_interior)]


def null_space_hermitian(A, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (Hilbert-Schmidt) of Hermitian ``X`` with ``Tr(A_i X) = 0`` for all i.

    ``A`` has shape ``(m, n, n)`` with Hermitian elements; the result has shape
    ``(k, n, n)``.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[-1]
    iu = np.triu_indices(n, 1)
    idx = np.arange(n)
    R = hermitian_coords(A)
    N = scipy.linalg.null_space(R, rcond=tol) if R.shape[0] else np.eye(n * n)
    k = N.shape[1]
    out = np.zeros((k, n, n), dtype=complex)
    nd, nu = n, iu[0].size
    out[:, idx, idx] = N[:nd].T
    up = (N[nd:nd + nu].T + 1j * N[nd + nu:].T) / np.sqrt(2)
    out[:, iu[0], iu[1]] = up
    out[:, iu[1], iu[0]] = up.conj()
    return out
