"""Hilbert-Schmidt orthonormal bases of su(d) and of the subalgebras used for
subgroup promises (so(d), diagonal, single-leg tensor embeddings)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError

TAGS = (
    "su_gellmann",
    "su_pauli",
    "so",
    "so_complement",
    "diag",
    "diag_complement",
    "tensor_sub",
    "tensor_complement",
)
SU_TAGS = ("su_gellmann", "su_pauli")


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Ordered orthonormal family of traceless Hermitian operators.

    ``elements`` has shape ``(count, dim, dim)``.  ``labels`` records how each
    element was built (for tensor bases: the per-leg index string).
    """

    dim: int
    elements: np.ndarray
    tag: str
    labels: tuple = field(default=())

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown basis tag {self.tag!r}")
        els = np.asarray(self.elements, dtype=complex).reshape(-1, self.dim, self.dim)
        els.setflags(write=False)
        object.__setattr__(self, "elements", els)

    def __len__(self):
        return self.elements.shape[0]

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    def gram(self) -> np.ndarray:
        E = self.elements.reshape(len(self), -1)
        return E.conj() @ E.T

    def coefficients(self, H) -> np.ndarray:
        """Real coordinates ``Tr(G_j H)`` of a Hermitian operator."""
        E = self.elements.reshape(len(self), -1)
        return np.real(E.conj() @ np.asarray(H).reshape(-1))

    def combine(self, coeffs) -> np.ndarray:
        return np.tensordot(np.asarray(coeffs, dtype=float), self.elements, axes=1)

    @property
    def is_su(self) -> bool:
        return self.tag in SU_TAGS


def _unit(d, j, k):
    E = np.zeros((d, d), dtype=complex)
    E[j, k] = 1.0
    return E


def _symmetric(d, j, k):
    return (_unit(d, j, k) + _unit(d, k, j)) / np.sqrt(2)


def _antisymmetric(d, j, k):
    # -i on the upper entry, the Pauli-Y sign
    return (-1j * _unit(d, j, k) + 1j * _unit(d, k, j)) / np.sqrt(2)


def _diagonal(d, l):
    v = np.zeros(d)
    v[:l] = 1.0
    v[l] = -l
    return np.diag(v / np.sqrt(l * (l + 1))).astype(complex)


def _sym_elements(d):
    return [_symmetric(d, j, k) for j in range(d) for k in range(j + 1, d)]


def _antisym_elements(d):
    return [_antisymmetric(d, j, k) for j in range(d) for k in range(j + 1, d)]


def _diag_elements(d):
    return [_diagonal(d, l) for l in range(1, d)]


def gellmann_basis(d: int) -> OperatorBasis:
    """Generalized Gell-Mann basis of su(d), ordered symmetric, antisymmetric,
    diagonal; within a type by ``(j, k)``.  For ``d = 2`` this is X, Y, Z over sqrt(2)."""
    if d < 2:
        raise DimensionError(f"gellmann_basis needs d >= 2, got {d}")
    return OperatorBasis(d, np.array(_sym_elements(d) + _antisym_elements(d) + _diag_elements(d)), "su_gellmann")


_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string(word: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in word:
        out = np.kron(out, _PAULI[ch])
    return out


def pauli_basis(n_qubits: int) -> OperatorBasis:
    """Normalized Pauli strings ``P / sqrt(2^n)`` without the identity string."""
    if not 1 <= n_qubits <= 4:
        raise DimensionError(f"pauli_basis supports 1..4 qubits, got {n_qubits}")
    words = ["".join(w) for w in itertools.product("IXYZ", repeat=n_qubits)][1:]
    els = np.array([pauli_string(w) for w in words]) / np.sqrt(2**n_qubits)
    return OperatorBasis(2**n_qubits, els, "su_pauli", labels=tuple(words))


def subalgebra_bases(d: int, kind: str):
    """Split su(d) into a subalgebra basis and an orthonormal complement.

    ``kind="so"``: the antisymmetric imaginary generators of so(d) against the
    real symmetric off-diagonal and diagonal elements.  ``kind="diag"``: the
    traceless real diagonals against all off-diagonal elements.
    """
    if d < 2:
        raise DimensionError(f"subalgebra_bases needs d >= 2, got {d}")
    if kind == "so":
        sub = OperatorBasis(d, np.array(_antisym_elements(d)), "so")
        comp = OperatorBasis(d, np.array(_sym_elements(d) + _diag_elements(d)), "so_complement")
    elif kind == "diag":
        sub = OperatorBasis(d, np.array(_diag_elements(d)), "diag")
        comp = OperatorBasis(d, np.array(_sym_elements(d) + _antisym_elements(d)), "diag_complement")
    else:
        raise ValueError(f"unknown subalgebra kind {kind!r} (expected 'so' or 'diag')")
    return sub, comp


def embed_on_leg(op, leg: int, d: int, n: int) -> np.ndarray:
    """``I (x) ... (x) op (x) ... (x) I`` with ``op`` on tensor factor ``leg`` (0-based)."""
    out = np.ones((1, 1), dtype=complex)
    for l in range(n):
        out = np.kron(out, op if l == leg else np.eye(d))
    return out


def tensor_embedding(d: int, n: int, local: OperatorBasis | None = None):
    """Lie algebra of SU(d)^{(x)n} inside su(d^n) and its complement.

    The subalgebra holds single-leg generators ``G_j`` on leg ``l`` divided by
    ``sqrt(d^(n-1))``.  The complement holds the strings ``(x)_l G_{k_l}`` with
    ``G_0 = I/sqrt(d)`` and at least two non-identity legs.  Labels are the
    index tuples ``k`` (0 = identity).
    """
    if d < 2 or n < 2:
        raise DimensionError(f"tensor_embedding needs d >= 2 and n >= 2, got d={d}, n={n}")
    if d**n > 16:
        raise DimensionError(f"tensor_embedding is capped at d^n <= 16, got {d ** n}")
    local = gellmann_basis(d) if local is None else local
    full_local = [np.eye(d, dtype=complex) / np.sqrt(d)] + list(local.elements)
    sub, sub_labels = [], []
    for leg in range(n):
        for j in range(len(local)):
            sub.append(embed_on_leg(local[j], leg, d, n) / np.sqrt(d ** (n - 1)))
            sub_labels.append(tuple(j + 1 if l == leg else 0 for l in range(n)))
    comp, comp_labels = [], []
    for k in itertools.product(range(len(full_local)), repeat=n):
        if sum(1 for kl in k if kl != 0) < 2:
            continue
        op = np.ones((1, 1), dtype=complex)
        for kl in k:
            op = np.kron(op, full_local[kl])
        comp.append(op)
        comp_labels.append(k)
    D = d**n
    return (
        OperatorBasis(D, np.array(sub), "tensor_sub", labels=tuple(sub_labels)),
        OperatorBasis(D, np.array(comp), "tensor_complement", labels=tuple(comp_labels)),
    )


def hermitian_basis(dim: int) -> np.ndarray:
    """Orthonormal basis of all Hermitian ``dim x dim`` matrices: ``I/sqrt(dim)`` first,
    then the Gell-Mann elements."""
    return np.concatenate([np.eye(dim, dtype=complex)[None] / np.sqrt(dim), gellmann_basis(dim).elements])


def expected_count(tag: str, d: int) -> int | None:
    counts = {
        "su_gellmann": d * d - 1,
        "su_pauli": d * d - 1,
        "so": d * (d - 1) // 2,
        "so_complement": d * (d + 1) // 2 - 1,
        "diag": d - 1,
        "diag_complement": d * d - d,
    }
    return counts.get(tag)


def is_orthonormal(basis: OperatorBasis, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(basis.gram() - np.eye(len(basis)))) <= tol)


def spans_su(sub: OperatorBasis, complement: OperatorBasis, tol: float = 1e-10) -> bool:
    """True if ``sub`` and ``complement`` together form an orthonormal basis of su(dim)."""
    if sub.dim != complement.dim:
        return False
    if len(sub) + len(complement) != sub.dim**2 - 1:
        return False
    joint = OperatorBasis(sub.dim, np.concatenate([sub.elements, complement.elements]), "su_gellmann")
    if not is_orthonormal(joint, tol):
        return False
    traces = np.abs(np.einsum("kii->k", joint.elements))
    return bool(np.all(traces <= tol))
