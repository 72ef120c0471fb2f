"""Turn basis-level constructs into ops over local qubit slots 0..m-1."""

from __future__ import annotations

import numpy as np

from . import classical
from .basis import (
    MAX_DENSE_QUBITS, BasisValue, FactoredBasis, align, factored, prep_unitary, span_equal,
    std_basis, tensor_bases,
)
from .errors import FlipArity, IncompleteMeasureBasis, MatrixTooLarge, SpanMismatch
from .ops import FourierOp, LowRank, Op, Permutation, PhaseMask, Unitary

# a partial translation keeps (vectors x 2^m) dense entries in memory
MAX_LOWRANK_ENTRIES = 1 << 24


def _same(fa: list[BasisValue], fb: list[BasisValue]) -> bool:
    return len(fa) == len(fb) and all(
        a.m == b.m and a.vectors.shape == b.vectors.shape
        and np.allclose(a.vectors, b.vectors, atol=1e-12) for a, b in zip(fa, fb))


def _fourier_direction(fa: list[BasisValue], fb: list[BasisValue]) -> bool | None:
    """True for std -> fourier, False for fourier -> std, None otherwise."""
    def all_std(fs):
        return all(f.kind == "std" for f in fs)

    def one_fourier(fs):
        return len(fs) == 1 and fs[0].kind == "fourier"

    if all_std(fa) and one_fourier(fb):
        return True
    if one_fourier(fa) and all_std(fb):
        return False
    return None


def lower_translation(src: FactoredBasis, dst: FactoredBasis) -> list[Op]:
    """Ops realizing ``src >> dst`` on slots 0..m-1."""
    if src.m != dst.m:
        raise SpanMismatch(f"translation from {src.m} to {dst.m} qubits")
    active = []
    for offset, width, fa, fb in align(src, dst):
        full_a = all(f.full_span for f in fa)
        full_b = all(f.full_span for f in fb)
        if full_a != full_b:
            raise SpanMismatch("translation between bases with different spans")
        if full_a and _same(fa, fb):
            continue
        active.append((offset, width, fa, fb, full_a))
    if all(group[4] for group in active):
        return [_full_group(*group[:4]) for group in active]
    qubits = tuple(q for offset, width, *_ in active for q in range(offset, offset + width))
    a = tensor_bases([f for g in active for f in g[2]])
    b = tensor_bases([f for g in active for f in g[3]])
    if a.size != b.size or not span_equal(a, b):
        raise SpanMismatch("translation between bases with different spans")
    if a.size << len(qubits) > MAX_LOWRANK_ENTRIES:
        raise MatrixTooLarge(f"partial translation on {len(qubits)} qubits is too large")
    return [LowRank(qubits, a.vectors, b.vectors)]


def _full_group(offset: int, width: int, fa, fb) -> Op:
    qubits = tuple(range(offset, offset + width))
    direction = _fourier_direction(fa, fb)
    if direction is not None:
        return FourierOp(qubits, direction)
    if width > MAX_DENSE_QUBITS:
        raise MatrixTooLarge(f"{width}-qubit translation exceeds the dense limit")
    a, b = tensor_bases(list(fa)), tensor_bases(list(fb))
    return Unitary(qubits, b.vectors.T @ a.vectors.conj())


def std_factors(m: int) -> FactoredBasis:
    return FactoredBasis(tuple(std_basis(1) for _ in range(m)))


def lower_measure_basis(b: FactoredBasis) -> list[Op]:
    """Change of basis that makes a measurement in ``b`` a std measurement."""
    if not b.full_span:
        raise IncompleteMeasureBasis(f"{b.size} vectors cannot resolve {b.m} qubits")
    return lower_translation(b, std_factors(b.m))


def predicate_projectors(b: FactoredBasis, offset: int = 0):
    """Projectors of a predicate basis; full-span factors impose nothing."""
    out = []
    for start, f in zip(b.offsets(), b.factors):
        if not f.full_span:
            out.append((tuple(range(offset + start, offset + start + f.m)), f.vectors))
    return tuple(out)


def lower_two_vector(b, theta: float | None) -> list[Op]:
    """``b.flip`` when ``theta`` is None, otherwise ``b.rotate(theta)``."""
    fb = factored(b)
    if fb.size != 2:
        raise FlipArity(f"needs a two-vector basis, got {fb.size} vectors")
    src = fb.dense()
    if theta is None:
        rows = src.vectors[::-1]
    else:
        rows = src.vectors * np.exp(1j * np.array([-theta / 2, theta / 2]))[:, None]
    return lower_translation(FactoredBasis((src,)), FactoredBasis((BasisValue(src.m, rows),)))


def prep_ops(symbols: str, offset: int = 0) -> list[Op]:
    return [Unitary((offset + i,), prep_unitary(s)) for i, s in enumerate(symbols) if s != "0"]


def embed_op(kind: str, f, inverse=None, tag: str = "") -> Op:
    """Permutation or phase mask of an embedded classical function."""
    table = classical.truth_table(f)
    if kind == "xor":
        action = classical.xor_embedding(table)
    elif kind == "phase":
        action = classical.phase_embedding(table)
        return PhaseMask(tuple(range(action.width)), action.mask.astype(complex), tag)
    else:
        action = classical.inplace_embedding(table, classical.truth_table(inverse))
    return Permutation(tuple(range(action.width)), action.perm, tag)


def wire_permutation(k: int, source: list[int]) -> np.ndarray:
    """Index map moving the wire in slot ``source[i]`` to slot ``i``."""
    x = np.arange(1 << k)
    out = np.zeros_like(x)
    for i, s in enumerate(source):
        bit = (x >> (k - 1 - s)) & 1
        out |= bit << (k - 1 - i)
    return out
