"""Dense complex linear algebra used by every other module.

Conventions
-----------
Vectorization is row-major: ``|A>> = sum_jk A[j, k] |j>|k>``, so that
``|I>><<I| = sum_jk |jj><kk|`` and ``<<A|B>> = Tr(A^dag B)``.  With this
convention ``(X (x) Y)|A>> = |X A Y^T>>``.

Bipartite operators act on ``C^d (x) C^d``; slot 1 is the (conjugated) input
leg, slot 2 the output leg.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import BranchCutError, DimensionError, NotHermitianError, NotUnitaryError

HERMITIAN_TOL = 1e-12  # operators assembled in-process
INPUT_TOL = 1e-8  # operators read from files or produced by finite differences


def _square(x, what="matrix") -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} has non-finite entries")
    return x


def hermitian_asymmetry(H) -> float:
    H = np.asarray(H)
    return float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0


def check_hermitian(H, tol: float = INPUT_TOL) -> np.ndarray:
    """Return ``H`` as a complex array after checking ``H = H^dag`` entrywise within ``tol``."""
    H = _square(H).astype(complex)
    asym = hermitian_asymmetry(H)
    if asym > tol:
        raise NotHermitianError(asym, tol)
    return H


def hermitian_part(H) -> np.ndarray:
    H = np.asarray(H)
    return 0.5 * (H + H.conj().T)


def traceless_hermitian_part(H) -> np.ndarray:
    H = hermitian_part(H)
    return H - np.trace(H) / H.shape[0] * np.eye(H.shape[0])


def unitarity_error(U) -> float:
    U = np.asarray(U)
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def check_unitary(U, tol: float = INPUT_TOL, what: str = "matrix") -> np.ndarray:
    U = _square(U, what).astype(complex)
    err = unitarity_error(U)
    if err > tol:
        raise NotUnitaryError(err, tol, what)
    return U


def check_special_unitary(U, tol: float = INPUT_TOL, what: str = "matrix") -> np.ndarray:
    U = check_unitary(U, tol, what)
    det_err = abs(np.linalg.det(U) - 1.0)
    if det_err > tol:
        raise NotUnitaryError(det_err, tol, f"{what} (det != 1)")
    return U


def eig_hermitian(H, tol: float = INPUT_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, V)`` with ``w`` ascending and ``V`` unitary such that
    ``H = V diag(w) V^dag``.  Raises :class:`NotHermitianError` if ``H`` is
    asymmetric beyond ``tol``.
    """
    H = check_hermitian(H, tol)
    w, V = np.linalg.eigh(hermitian_part(H))
    return w, V


def min_eigenvalue(H) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(H))[0])


def partial_trace(X, slot: int, d: int | None = None) -> np.ndarray:
    """Trace out ``slot`` (1 or 2) of an operator on ``C^d (x) C^d``."""
    if slot not in (1, 2):
        raise ValueError(f"slot must be 1 or 2, got {slot!r}")
    X = _square(X, "bipartite operator")
    if d is None:
        d = int(round(np.sqrt(X.shape[0])))
    if d * d != X.shape[0]:
        raise DimensionError(f"operator of size {X.shape[0]} is not on C^{d} (x) C^{d}")
    T = X.reshape(d, d, d, d)
    if slot == 1:
        return np.einsum("ijik->jk", T)
    return np.einsum("ijkj->ik", T)


def vectorize(A) -> np.ndarray:
    """Row-major vectorization ``|A>>`` of a square matrix."""
    A = _square(A)
    return A.reshape(-1).copy()


def devectorize(v) -> np.ndarray:
    v = np.asarray(v).reshape(-1)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(d, d).copy()


def dket(A) -> np.ndarray:
    """``|A>>`` as a column vector."""
    return vectorize(A).reshape(-1, 1)


def dketbra(A, B=None) -> np.ndarray:
    """``|A>><<B|`` (``B`` defaults to ``A``)."""
    a = vectorize(A)
    b = a if B is None else vectorize(B)
    return np.outer(a, b.conj())


def max_entangled(d: int) -> np.ndarray:
    """Unnormalized ``|I>><<I|`` on ``C^d (x) C^d``."""
    return dketbra(np.eye(d))


def swap(d: int) -> np.ndarray:
    S = np.zeros((d * d, d * d))
    for j in range(d):
        for k in range(d):
            S[k * d + j, j * d + k] = 1.0
    return S.astype(complex)


def sym_projector(d: int) -> np.ndarray:
    return 0.5 * (np.eye(d * d) + swap(d))


def antisym_projector(d: int) -> np.ndarray:
    return 0.5 * (np.eye(d * d) - swap(d))


def expm_hermitian(H, scale: complex = 1j) -> np.ndarray:
    """``exp(scale * H)`` for Hermitian ``H`` through its eigendecomposition."""
    w, V = np.linalg.eigh(hermitian_part(H))
    return (V * np.exp(scale * w)) @ V.conj().T


def mat_log_unitary(U, margin: float = 0.1, tol: float = INPUT_TOL) -> np.ndarray:
    """Principal Hermitian generator ``K`` with ``U = exp(iK)``.

    All eigenphases must lie in ``(-pi + margin, pi - margin)``; otherwise the
    principal branch is ambiguous and :class:`BranchCutError` is raised.
    """
    U = check_unitary(U, tol)
    # complex Schur form of a normal matrix is diagonal, Q unitary
    T, Q = scipy.linalg.schur(U, output="complex")
    lam = np.diag(T)
    phases = np.angle(lam)
    worst = float(np.max(np.abs(phases))) if phases.size else 0.0
    if worst >= np.pi - margin:
        raise BranchCutError(
            f"eigenphase {worst:.4f} is within {margin} of the branch cut at +-pi"
        )
    K = (Q * phases) @ Q.conj().T
    return hermitian_part(K)


def haar_unitary(d: int, seed=None) -> np.ndarray:
    """Haar-random element of SU(d), deterministic for an integer ``seed``.

    QR of a complex Ginibre matrix with the R-diagonal phase fix, then division
    by a d-th root of the determinant.  ``seed`` may also be a
    :class:`numpy.random.Generator`.
    """
    if d < 2:
        raise DimensionError(f"haar_unitary needs d >= 2, got {d}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    r = np.diag(R)
    Q = Q * (r / np.abs(r))
    det = np.linalg.det(Q)
    return Q / det ** (1.0 / d)


def random_hermitian(d: int, seed=None, traceless: bool = False) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    H = hermitian_part(A)
    if traceless:
        H = H - np.trace(H) / d * np.eye(d)
    return H


def norm(X, kind: str = "frobenius") -> float:
    """Schatten norms: ``operator`` (inf), ``frobenius`` (2) or ``trace`` (1)."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise DimensionError(f"norm expects a matrix, got shape {X.shape}")
    if kind == "frobenius":
        return float(np.linalg.norm(X, "fro"))
    s = np.linalg.svd(X, compute_uv=False)
    if kind == "operator":
        return float(s[0]) if s.size else 0.0
    if kind == "trace":
        return float(np.sum(s))
    raise ValueError(f"unknown norm kind {kind!r}")


def load_matrix(path, unitary: bool = True, tol: float = INPUT_TOL) -> np.ndarray:
    """Read the shared JSON matrix format ``{"d": n, "entries": [[[re, im], ...], ...]}``."""
    with open(path) as fh:
        data = json.load(fh)
    return matrix_from_json(data, unitary=unitary, tol=tol, source=str(path))


def matrix_from_json(data: dict, unitary: bool = True, tol: float = INPUT_TOL, source: str = "<json>"):
    try:
        n = int(data["d"])
        rows = data["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{source}: expected keys 'd' and 'entries'") from exc
    M = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    if M.shape != (n, n):
        raise DimensionError(f"{source}: declared d={n} but entries have shape {M.shape}")
    if unitary:
        check_unitary(M, tol, what=source)
    return M


def matrix_to_json(M) -> dict:
    M = _square(M)
    return {
        "d": int(M.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M, dtype=complex)],
    }


def save_matrix(path, M) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(M)))
