"""A small expression language for target maps f: SU(d) -> SU(d).

Grammar (whitespace-insensitive, right-associative)::

    expr := term | term "o" expr | term "*" expr        ("o" may be written "∘")
    term := "id" | "inv" | "T" | "conj" | "pow:" INT
          | "lmul:" FILE | "rmul:" FILE | "sandwich:" FILE | "(" expr ")"

``a o b`` is composition ``a(b(U))``; ``a * b`` is the pointwise product
``a(U) b(U)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, DslSyntaxError
from .linalg import INPUT_TOL, check_special_unitary, check_unitary, load_matrix

log = logging.getLogger(__name__)

MAX_DEPTH = 32


class FuncExpr:
    """Base class of expression nodes; nodes are immutable dataclasses."""

    def depth(self) -> int:
        return 1


@dataclass(frozen=True)
class Identity(FuncExpr):
    pass


@dataclass(frozen=True)
class Inverse(FuncExpr):
    pass


@dataclass(frozen=True)
class Transpose(FuncExpr):
    pass


@dataclass(frozen=True)
class Conjugate(FuncExpr):
    pass


@dataclass(frozen=True)
class Power(FuncExpr):
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k == 0:
            raise ValueError(f"power exponent must be a nonzero integer, got {self.k!r}")


@dataclass(frozen=True)
class _Fixed(FuncExpr):
    """A primitive carrying a fixed SU(d) matrix; compared by ``source``."""

    matrix: np.ndarray = field(compare=False, repr=False)
    source: str = ""

    def __post_init__(self):
        M = check_special_unitary(self.matrix, INPUT_TOL, what=self.source or "embedded matrix")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)


@dataclass(frozen=True)
class LMul(_Fixed):
    pass


@dataclass(frozen=True)
class RMul(_Fixed):
    pass


@dataclass(frozen=True)
class Sandwich(_Fixed):
    pass


@dataclass(frozen=True)
class Compose(FuncExpr):
    """``outer(inner(U))``."""

    outer: FuncExpr
    inner: FuncExpr

    def depth(self):
        return 1 + max(self.outer.depth(), self.inner.depth())


@dataclass(frozen=True)
class Product(FuncExpr):
    """``left(U) @ right(U)``."""

    left: FuncExpr
    right: FuncExpr

    def depth(self):
        return 1 + max(self.left.depth(), self.right.depth())


_KEYWORDS = {"id": Identity, "inv": Inverse, "T": Transpose, "conj": Conjugate}
_FIXED = {"lmul:": LMul, "rmul:": RMul, "sandwich:": Sandwich}
_FILE_STOP = set(" \t\n()*∘")


class _Parser:
    def __init__(self, text: str, d: int, base_dir: Path | None):
        self.text = text
        self.pos = 0
        self.d = d
        self.base_dir = base_dir

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek_op(self):
        self.skip()
        if self.text.startswith("∘", self.pos) or self.text.startswith("*", self.pos):
            return self.text[self.pos]
        # ASCII composition: a bare "o" not starting a longer word
        if self.text.startswith("o", self.pos):
            return "o"
        return None

    def parse_expr(self, depth=0) -> FuncExpr:
        if depth > MAX_DEPTH:
            raise DslSyntaxError(f"expression deeper than {MAX_DEPTH}", self.pos)
        left = self.parse_term(depth)
        op = self.peek_op()
        if op is None:
            return left
        self.pos += 1
        right = self.parse_expr(depth + 1)
        return Product(left, right) if op == "*" else Compose(left, right)

    def parse_term(self, depth) -> FuncExpr:
        self.skip()
        start = self.pos
        t = self.text
        if t.startswith("(", start):
            self.pos += 1
            inner = self.parse_expr(depth + 1)
            self.skip()
            if not t.startswith(")", self.pos):
                raise DslSyntaxError("expected ')'", self.pos)
            self.pos += 1
            return inner
        if t.startswith("pow:", start):
            self.pos += 4
            self.skip()
            m = self.pos
            if m < len(t) and t[m] in "+-":
                m += 1
            while m < len(t) and t[m].isdigit():
                m += 1
            digits = t[self.pos:m]
            if not digits.lstrip("+-"):
                raise DslSyntaxError("expected integer after 'pow:'", self.pos)
            k = int(digits)
            if k == 0:
                raise DslSyntaxError("pow:0 is not allowed", self.pos)
            self.pos = m
            return Power(k)
        for kw, cls in _FIXED.items():
            if t.startswith(kw, start):
                self.pos += len(kw)
                self.skip()
                m = self.pos
                while m < len(t) and t[m] not in _FILE_STOP:
                    m += 1
                name = t[self.pos:m]
                if not name:
                    raise DslSyntaxError(f"expected file name after {kw!r}", self.pos)
                self.pos = m
                return cls(self.load(name, start), name)
        # longest keyword first so "id"/"inv" are not confused
        for kw in sorted(_KEYWORDS, key=len, reverse=True):
            if t.startswith(kw, start):
                self.pos += len(kw)
                return _KEYWORDS[kw]()
        raise DslSyntaxError("expected a primitive or '('", start)

    def load(self, name, position):
        path = Path(name)
        if not path.is_absolute() and self.base_dir is not None:
            path = self.base_dir / path
        try:
            M = load_matrix(path, unitary=True)
        except OSError as exc:
            raise DslSyntaxError(f"cannot read matrix file {name!r}: {exc}", position) from exc
        if M.shape[0] != self.d:
            raise DimensionError(f"matrix file {name!r} has d={M.shape[0]}, expected {self.d}")
        det_err = abs(np.linalg.det(M) - 1)
        if det_err > INPUT_TOL:
            raise DslSyntaxError(f"matrix in {name!r} is not in SU({self.d}) (|det-1|={det_err:.2e})", position)
        return M


def parse(text: str, d: int, base_dir=None) -> FuncExpr:
    """Parse an expression; matrix files are resolved relative to ``base_dir``."""
    p = _Parser(text, d, Path(base_dir) if base_dir is not None else None)
    expr = p.parse_expr()
    p.skip()
    if p.pos != len(text):
        raise DslSyntaxError("unexpected trailing input", p.pos)
    return expr


def to_text(f: FuncExpr, ascii: bool = True) -> str:
    """Print an expression in the parser's concrete syntax."""
    comp = " o " if ascii else " ∘ "
    if isinstance(f, Identity):
        return "id"
    if isinstance(f, Inverse):
        return "inv"
    if isinstance(f, Transpose):
        return "T"
    if isinstance(f, Conjugate):
        return "conj"
    if isinstance(f, Power):
        return f"pow:{f.k}"
    if isinstance(f, LMul):
        return f"lmul:{f.source}"
    if isinstance(f, RMul):
        return f"rmul:{f.source}"
    if isinstance(f, Sandwich):
        return f"sandwich:{f.source}"
    if isinstance(f, Compose):
        return f"({to_text(f.outer, ascii)}{comp}{to_text(f.inner, ascii)})"
    if isinstance(f, Product):
        return f"({to_text(f.left, ascii)} * {to_text(f.right, ascii)})"
    raise TypeError(f"not an expression node: {f!r}")


def _normalize_det(V: np.ndarray) -> np.ndarray:
    d = V.shape[0]
    det = np.linalg.det(V)
    if abs(det - 1) > 1e-12:
        log.debug("global-phase normalization applied (det = %s)", det)
        V = V / det ** (1.0 / d)
    return V


def _eval(f: FuncExpr, U: np.ndarray) -> np.ndarray:
    if isinstance(f, Identity):
        return U
    if isinstance(f, Inverse):
        return U.conj().T
    if isinstance(f, Transpose):
        return U.T
    if isinstance(f, Conjugate):
        return U.conj()
    if isinstance(f, Power):
        return np.linalg.matrix_power(U if f.k > 0 else U.conj().T, abs(f.k))
    if isinstance(f, _Fixed):
        if f.matrix.shape != U.shape:
            raise DimensionError(f"{f.source}: matrix is {f.matrix.shape[0]}-dimensional, input is {U.shape[0]}")
        if isinstance(f, LMul):
            return f.matrix @ U
        if isinstance(f, RMul):
            return U @ f.matrix
        return f.matrix @ U @ f.matrix.conj().T
    if isinstance(f, Compose):
        return _eval(f.outer, _eval(f.inner, U))
    if isinstance(f, Product):
        return _eval(f.left, U) @ _eval(f.right, U)
    raise TypeError(f"not an expression node: {f!r}")


def evaluate(f: FuncExpr, U) -> np.ndarray:
    """Evaluate ``f`` at a unitary ``U``; the determinant is renormalized to 1."""
    if f.depth() > MAX_DEPTH:
        raise ValueError(f"expression deeper than {MAX_DEPTH}")
    U = check_unitary(U, INPUT_TOL)
    return _normalize_det(_eval(f, U))


def power_product(f: FuncExpr, n: int) -> FuncExpr:
    """The explicit n-fold product ``f * f * ... * f``."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    out = f
    for _ in range(n - 1):
        out = Product(f, out)
    return out
