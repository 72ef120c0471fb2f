"""Numeric meaning of bases: vector lists, spans, translations, projectors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np

from .errors import FlipArity, IncompleteMeasureBasis, MatrixTooLarge, SpanMismatch
from .syntax import (
    AngleConst, BasisFold, BasisLit, BasisTensor, BasisVector, Flip,
    Fourier, Ij, Measure, Pm, Prep, QubitLit, Rotate, Std, Tensor, Translate, BitLit,
    Builtin, Apply, DimConst, angle_eval,
)

TOL = 1e-9
MAX_DENSE_QUBITS = 14

_R = 1 / math.sqrt(2)
SYMBOL_VECTORS: dict[str, np.ndarray] = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([_R, _R], dtype=complex),
    "-": np.array([_R, -_R], dtype=complex),
    "i": np.array([_R, 1j * _R], dtype=complex),
    "j": np.array([_R, -1j * _R], dtype=complex),
}
SYMBOL_FAMILY = {"0": "std", "1": "std", "+": "pm", "-": "pm", "i": "ij", "j": "ij"}


def literal_vector(symbols: str, angle: float = 0.0) -> np.ndarray:
    """The state e^{i angle} |symbols>, first symbol most significant."""
    vec = reduce(np.kron, (SYMBOL_VECTORS[s] for s in symbols), np.ones(1, dtype=complex))
    return vec * np.exp(1j * angle) if angle else vec


def fourier_matrix(n: int) -> np.ndarray:
    """Rows are F_j with amplitudes e^{2 pi i jk / 2^n} / sqrt(2^n)."""
    d = 1 << n
    k = np.arange(d)
    return np.exp(2j * np.pi * np.outer(k, k) / d) / math.sqrt(d)


@dataclass(frozen=True, eq=False)
class BasisValue:
    """An ordered orthonormal list of vectors, stored as rows."""

    m: int
    vectors: np.ndarray
    kind: str = "dense"  # std | fourier | literal | dense

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def full_span(self) -> bool:
        return self.size == 1 << self.m

    @cached_property
    def projector(self) -> np.ndarray:
        return self.vectors.T @ self.vectors.conj()

    def is_std(self) -> bool:
        if self.kind == "std":
            return True
        return self.full_span and self.m <= MAX_DENSE_QUBITS and np.allclose(
            self.vectors, np.eye(1 << self.m), atol=1e-12)


def std_basis(m: int) -> BasisValue:
    return BasisValue(m, np.eye(1 << m, dtype=complex), "std")


def tensor_bases(parts: list[BasisValue]) -> BasisValue:
    """Ordered pairwise product: the first factor's index varies slowest."""
    if not parts:
        return BasisValue(0, np.ones((1, 1), dtype=complex), "std")
    if len(parts) == 1:
        return parts[0]
    m = sum(p.m for p in parts)
    vecs = reduce(lambda a, b: np.einsum("ai,bj->abij", a, b).reshape(a.shape[0] * b.shape[0], -1),
                  (p.vectors for p in parts))
    kind = "std" if all(p.kind == "std" for p in parts) else "dense"
    return BasisValue(m, vecs, kind)


@dataclass(frozen=True, eq=False)
class FactoredBasis:
    """A basis kept as a tensor of independent factors, left to right."""

    factors: tuple[BasisValue, ...]

    @property
    def m(self) -> int:
        return sum(f.m for f in self.factors)

    @property
    def size(self) -> int:
        return math.prod(f.size for f in self.factors)

    @property
    def full_span(self) -> bool:
        return all(f.full_span for f in self.factors)

    def dense(self) -> BasisValue:
        return tensor_bases(list(self.factors))

    def offsets(self) -> list[int]:
        out, pos = [], 0
        for f in self.factors:
            out.append(pos)
            pos += f.m
        return out


def factored(b) -> FactoredBasis:
    """Resolve a monomorphized basis expression to its factors."""
    return FactoredBasis(tuple(_factors(b)))


def _factors(b) -> list[BasisValue]:
    if isinstance(b, Std):
        return [std_basis(1)]
    if isinstance(b, Pm):
        return [BasisValue(1, np.array([SYMBOL_VECTORS["+"], SYMBOL_VECTORS["-"]]), "literal")]
    if isinstance(b, Ij):
        return [BasisValue(1, np.array([SYMBOL_VECTORS["i"], SYMBOL_VECTORS["j"]]), "literal")]
    if isinstance(b, Fourier):
        n = _const(b.dim)
        if n == 0:
            return []
        if n == 1:
            return [BasisValue(1, fourier_matrix(1), "literal")]
        if n > MAX_DENSE_QUBITS + 6:
            raise MatrixTooLarge(f"fourier[{n}] is beyond the simulator's reach")
        return [BasisValue(n, fourier_matrix(n), "fourier")]
    if isinstance(b, BasisLit):
        strings = [v.literal.expanded() for v in b.vectors]
        m = len(strings[0])
        if m == 0:
            return []
        rows = np.array([literal_vector(s, angle_eval(v.angle)) for s, v in zip(strings, b.vectors)])
        return [BasisValue(m, rows, "literal")]
    if isinstance(b, BasisTensor):
        return [f for item in b.items for f in _factors(item)]
    if isinstance(b, BasisFold):
        return _factors(b.basis) * _const(b.count)
    raise TypeError(f"not a basis expression: {b!r}")


def _const(d) -> int:
    if not isinstance(d, DimConst):
        raise TypeError(f"basis dimension not monomorphized: {d!r}")
    return d.value


def veclist(b) -> BasisValue:
    """The ordered vector list of a basis expression."""
    return factored(b).dense()


def basis_size(b) -> int:
    """Number of vectors, without building them."""
    if isinstance(b, (Std, Pm, Ij)):
        return 2
    if isinstance(b, Fourier):
        return 1 << _const(b.dim)
    if isinstance(b, BasisLit):
        return len(b.vectors)
    if isinstance(b, BasisTensor):
        return math.prod(basis_size(i) for i in b.items)
    if isinstance(b, BasisFold):
        return basis_size(b.basis) ** _const(b.count)
    raise TypeError(f"not a basis expression: {b!r}")


def basis_qubits(b) -> int:
    if isinstance(b, (Std, Pm, Ij)):
        return 1
    if isinstance(b, Fourier):
        return _const(b.dim)
    if isinstance(b, BasisLit):
        return len(b.vectors[0].literal.expanded())
    if isinstance(b, BasisTensor):
        return sum(basis_qubits(i) for i in b.items)
    if isinstance(b, BasisFold):
        return basis_qubits(b.basis) * _const(b.count)
    raise TypeError(f"not a basis expression: {b!r}")


# ---------------------------------------------------------------- spans

def span_distance(a: BasisValue, b: BasisValue) -> float:
    """Frobenius norm of P_a - P_b without forming either projector.

    ||P_a - P_b||^2 splits into the parts of each list lying outside the
    other span; computing those residuals directly avoids the cancellation
    of the Gram-matrix identity.
    """
    if a.m != b.m:
        raise ValueError("bases act on different qubit counts")
    A, B = a.vectors, b.vectors
    ra = A - (A @ B.conj().T) @ B
    rb = B - (B @ A.conj().T) @ A
    sq = float(np.sum(np.abs(ra) ** 2) + np.sum(np.abs(rb) ** 2))
    return math.sqrt(sq)


def span_equal(a: BasisValue, b: BasisValue, tol: float | None = None) -> bool:
    tol = TOL if tol is None else tol
    return span_distance(a, b) < tol


def align(a: FactoredBasis, b: FactoredBasis) -> list[tuple[int, int, list[BasisValue], list[BasisValue]]]:
    """Split two factorizations at their common boundaries.

    Returns (offset, width, factors of a, factors of b) per group.
    """
    groups = []
    ia = ib = 0
    pa = pb = 0
    start = 0
    fa: list[BasisValue] = []
    fb: list[BasisValue] = []
    A, B = list(a.factors), list(b.factors)
    while ia < len(A) or ib < len(B):
        if pa <= pb and ia < len(A):
            fa.append(A[ia])
            pa += A[ia].m
            ia += 1
        elif ib < len(B):
            fb.append(B[ib])
            pb += B[ib].m
            ib += 1
        else:
            fa.append(A[ia])
            pa += A[ia].m
            ia += 1
        if pa == pb and (fa or fb):
            # absorb zero-width factors greedily; they contribute scalars only
            groups.append((start, pa - start, fa, fb))
            start, fa, fb = pa, [], []
    if fa or fb:
        groups.append((start, max(pa, pb) - start, fa, fb))
    return groups


def factored_span_equal(a: FactoredBasis, b: FactoredBasis, tol: float | None = None) -> bool:
    tol = TOL if tol is None else tol
    if a.m != b.m:
        return False
    for _, _, fa, fb in align(a, b):
        da, db = tensor_bases(fa), tensor_bases(fb)
        if da.size != db.size:
            return False
        if da.full_span and db.full_span:
            continue
        if not span_equal(da, db, tol):
            return False
    return True


# ----------------------------------------------------------- unitaries

@dataclass(frozen=True, eq=False)
class UnitaryBlock:
    m: int
    matrix: np.ndarray

    def is_unitary(self, tol: float | None = None) -> bool:
        tol = TOL if tol is None else tol
        eye = np.eye(self.matrix.shape[0])
        return float(np.linalg.norm(self.matrix.conj().T @ self.matrix - eye)) < tol


def gram_schmidt_extension(vectors: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Complete orthonormal rows to a basis using standard vectors in index order."""
    tol = TOL if tol is None else tol
    k, d = vectors.shape
    basis = np.zeros((d, d), dtype=complex)
    basis[:k] = vectors
    filled = k
    extra = []
    for idx in range(d):
        if filled == d:
            break
        r = np.zeros(d, dtype=complex)
        r[idx] = 1.0
        done = basis[:filled]
        for _ in range(2):  # re-orthogonalize once for stability
            r = r - done.T @ (done.conj() @ r)
        norm = np.linalg.norm(r)
        if norm < tol:
            continue
        r = r / norm
        basis[filled] = r
        filled += 1
        extra.append(r)
    return np.array(extra, dtype=complex).reshape(len(extra), d)


def translation_unitary(b1: BasisValue, b2: BasisValue, tol: float | None = None) -> UnitaryBlock:
    """U = sum_k |e2_k><e1_k| with both lists extended by the same complement."""
    tol = TOL if tol is None else tol
    if b1.m > MAX_DENSE_QUBITS:
        raise MatrixTooLarge(f"{b1.m}-qubit translation exceeds the dense limit")
    if b1.m != b2.m or b1.size != b2.size or not span_equal(b1, b2, tol):
        raise SpanMismatch("translation between bases with different spans")
    ext = gram_schmidt_extension(b1.vectors, tol)
    e1 = np.vstack([b1.vectors, ext])
    e2 = np.vstack([b2.vectors, ext])
    return UnitaryBlock(b1.m, e2.T @ e1.conj())


def translation_closed_form(b1: BasisValue, b2: BasisValue) -> np.ndarray:
    """The same unitary as ``translation_unitary`` without building the complement."""
    d = 1 << b1.m
    return np.eye(d, dtype=complex) + (b2.vectors - b1.vectors).T @ b1.vectors.conj()


def predicated_unitary(b: BasisValue, u: UnitaryBlock) -> UnitaryBlock:
    """C_bU = (I - P) (x) I + P (x) U with predicate qubits leftmost."""
    m = b.m + u.m
    if m > MAX_DENSE_QUBITS:
        raise MatrixTooLarge(f"{m}-qubit predicated block exceeds the dense limit")
    p = b.projector
    eye_b = np.eye(1 << b.m)
    eye_u = np.eye(1 << u.m)
    return UnitaryBlock(m, np.kron(eye_b - p, eye_u) + np.kron(p, u.matrix))


@dataclass(frozen=True, eq=False)
class MeasurementSpec:
    basis: BasisValue

    @property
    def m(self) -> int:
        return self.basis.m

    def projectors(self) -> list[np.ndarray]:
        return [np.outer(v, v.conj()) for v in self.basis.vectors]

    def outcome(self, j: int) -> str:
        """Bit encoding of the j-th outcome (0-based), most significant first."""
        return format(j, f"0{self.m}b") if self.m else ""


def measurement_spec(b: BasisValue) -> MeasurementSpec:
    if not b.full_span:
        raise IncompleteMeasureBasis(f"{b.size} vectors cannot resolve {b.m} qubits")
    return MeasurementSpec(b)


# -------------------------------------------------------------- desugaring

_FLIPPED = {Std: "10", Pm: "-+", Ij: "ji"}
_PREP = {"0": None, "1": "10", "+": "+-", "-": "-+", "i": "ij", "j": "ji"}


def _two_vectors(b):
    if type(b) in _FLIPPED:
        return [(0.0, c) for c in _FLIPPED[type(b)][::-1]]
    if isinstance(b, BasisLit) and len(b.vectors) == 2:
        return [(v.angle, v.literal) for v in b.vectors]
    return None


def desugar(node):
    """Rewrite ``.flip``, ``.rotate``, ``.prep`` and non-std ``.measure``.

    Only bases whose two vectors are syntactically visible are rewritten
    here; the lowering pass handles every other two-vector basis
    numerically with the same meaning.
    """
    if isinstance(node, Flip):
        pair = _two_vectors(node.basis)
        if pair is None:
            if basis_size(node.basis) != 2:
                raise FlipArity(f".flip needs a two-vector basis, got {basis_size(node.basis)} vectors")
            raise ValueError("flip of this basis shape is lowered numerically")
        vecs = tuple(BasisVector(_angle(a), _lit(l)) for a, l in reversed(pair))
        return Translate(node.basis, BasisLit(vecs), node.span)
    if isinstance(node, Rotate):
        pair = _two_vectors(node.basis)
        if pair is None:
            if basis_size(node.basis) != 2:
                raise FlipArity(f".rotate needs a two-vector basis, got {basis_size(node.basis)} vectors")
            raise ValueError("rotation of this basis shape is lowered numerically")
        theta = angle_eval(node.angle)
        (a1, l1), (a2, l2) = pair
        vecs = (BasisVector(AngleConst(angle_eval(_angle(a1)) - theta / 2), _lit(l1)),
                BasisVector(AngleConst(angle_eval(_angle(a2)) + theta / 2), _lit(l2)))
        return Translate(node.basis, BasisLit(vecs), node.span)
    if isinstance(node, Prep):
        if isinstance(node.operand, QubitLit):
            parts = [_prep_symbol(s) for s in node.operand.expanded()]
        elif isinstance(node.operand, BitLit):
            parts = [_prep_symbol("1" if bit else "0") for bit in node.operand.bits]
        else:
            raise TypeError("prep operand must be a qubit or bit literal")
        return parts[0] if len(parts) == 1 else Tensor(tuple(parts), node.span)
    if isinstance(node, Measure):
        m = basis_qubits(node.basis)
        std_m = Std() if m == 1 else BasisFold(Std(), DimConst(m))
        if isinstance(node.basis, Std) or node.basis == std_m:
            return node
        return Apply(Measure(std_m, node.span), Translate(node.basis, std_m, node.span), node.span)
    return node


def _prep_symbol(s: str):
    if _PREP[s] is None:
        return Builtin("id")
    if s == "1":
        return Flip(Std())
    pair = _PREP[s]
    if s in "+-":
        return Translate(Std(), BasisLit(tuple(BasisVector(AngleConst(0.0), QubitLit(c)) for c in pair)))
    return Translate(Std(), BasisLit(tuple(BasisVector(AngleConst(0.0), QubitLit(c)) for c in pair)))


def _angle(a):
    if isinstance(a, float):
        return AngleConst(a)
    return a


def _lit(l):
    return QubitLit(l) if isinstance(l, str) else l


def prep_unitary(symbol: str) -> np.ndarray:
    """2x2 matrix taking |0> to the symbol's state (std >> its family basis)."""
    if symbol == "0":
        return np.eye(2, dtype=complex)
    a, b = _PREP[symbol]
    return np.column_stack([SYMBOL_VECTORS[a], SYMBOL_VECTORS[b]])
