"""Lowered operations and their action on state tensors.

A state is a complex tensor whose leading axes are qubits (one axis of
size 2 each) and whose trailing axes, if any, are a batch that the
operations never touch. Operations name qubits by integer ids; the caller
supplies the id -> axis mapping.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

Qubits = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Unitary:
    qubits: Qubits
    matrix: np.ndarray

    def inverse(self) -> "Unitary":
        return Unitary(self.qubits, self.matrix.conj().T)


@dataclass(frozen=True, eq=False)
class FourierOp:
    """The QFT (``forward``) or its adjoint, applied with an FFT."""

    qubits: Qubits
    forward: bool = True

    def inverse(self) -> "FourierOp":
        return FourierOp(self.qubits, not self.forward)


@dataclass(frozen=True, eq=False)
class LowRank:
    """Identity plus (dst - src) src^dagger: a translation between partial bases."""

    qubits: Qubits
    src: np.ndarray
    dst: np.ndarray

    def inverse(self) -> "LowRank":
        return LowRank(self.qubits, self.dst, self.src)


@dataclass(frozen=True, eq=False)
class Permutation:
    """Amplitude at index x moves to index perm[x]."""

    qubits: Qubits
    perm: np.ndarray
    tag: str = ""

    def inverse(self) -> "Permutation":
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.perm.size)
        return Permutation(self.qubits, inv, self.tag)


@dataclass(frozen=True, eq=False)
class PhaseMask:
    qubits: Qubits
    mask: np.ndarray
    tag: str = ""

    def inverse(self) -> "PhaseMask":
        return PhaseMask(self.qubits, self.mask.conj(), self.tag)


@dataclass(frozen=True, eq=False)
class GlobalPhase:
    theta: float
    qubits: Qubits = ()

    def inverse(self) -> "GlobalPhase":
        return GlobalPhase(-self.theta)


@dataclass(frozen=True, eq=False)
class Controlled:
    """Run ``body`` inside the image of the product of projectors.

    Each projector is (qubits, rows) where rows are orthonormal vectors
    spanning the predicate subspace on those qubits.
    """

    projectors: tuple[tuple[Qubits, np.ndarray], ...]
    body: tuple["Op", ...]

    @property
    def qubits(self) -> Qubits:
        seen: dict[int, None] = {}
        for qs, _ in self.projectors:
            seen.update(dict.fromkeys(qs))
        for op in self.body:
            seen.update(dict.fromkeys(op.qubits))
        return tuple(seen)

    def inverse(self) -> "Controlled":
        return Controlled(self.projectors, inverse_ops(self.body))


@dataclass(frozen=True, eq=False)
class Alloc:
    """Fresh |0...0> qubits (only in recorded traces)."""

    qubits: Qubits

    def inverse(self) -> "Release":
        return Release(self.qubits)


@dataclass(frozen=True, eq=False)
class Release:
    """Return provably-|0> qubits to the pool (only in recorded traces)."""

    qubits: Qubits

    def inverse(self) -> Alloc:
        return Alloc(self.qubits)


Op = Unitary | FourierOp | LowRank | Permutation | PhaseMask | GlobalPhase | Controlled | Alloc | Release


def inverse_ops(ops: Sequence[Op]) -> tuple[Op, ...]:
    return tuple(op.inverse() for op in reversed(ops))


def remap(op: Op, f: Callable[[int], int]) -> Op:
    if isinstance(op, GlobalPhase):
        return op
    if isinstance(op, Controlled):
        return Controlled(tuple((tuple(map(f, qs)), rows) for qs, rows in op.projectors),
                          tuple(remap(o, f) for o in op.body))
    return replace(op, qubits=tuple(map(f, op.qubits)))


def oracle_tags(op: Op) -> list[str]:
    if isinstance(op, (Permutation, PhaseMask)) and op.tag:
        return [op.tag]
    if isinstance(op, Controlled):
        return [t for o in op.body for t in oracle_tags(o)]
    return []


# ------------------------------------------------------------ application

def _gather(tensor: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Move ``axes`` to the front and flatten to (2^k, rest)."""
    moved = np.moveaxis(tensor, list(axes), list(range(len(axes))))
    return moved.reshape(1 << len(axes), -1)


def _scatter(flat: np.ndarray, axes: Sequence[int], shape: tuple[int, ...]) -> np.ndarray:
    k = len(axes)
    front_shape = (2,) * k + tuple(s for i, s in enumerate(shape) if i not in set(axes))
    moved = flat.reshape(front_shape)
    return np.moveaxis(moved, list(range(k)), list(axes))


def apply_flat(tensor: np.ndarray, axes: Sequence[int],
               fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    if not axes:
        return fn(tensor.reshape(1, -1)).reshape(tensor.shape)
    flat = _gather(tensor, axes)
    return _scatter(fn(flat), axes, tensor.shape)


def project(tensor: np.ndarray, axes: Sequence[int], rows: np.ndarray) -> np.ndarray:
    return apply_flat(tensor, axes, lambda f: rows.T @ (rows.conj() @ f))


def apply_op(tensor: np.ndarray, axis_of: Mapping[int, int], op: Op) -> np.ndarray:
    """Return ``op`` applied to ``tensor``; never mutates the input."""
    if isinstance(op, GlobalPhase):
        return tensor * np.exp(1j * op.theta)
    if isinstance(op, Controlled):
        phi = tensor
        for qs, rows in op.projectors:
            phi = project(phi, [axis_of[q] for q in qs], rows)
        out = phi
        for inner in op.body:
            out = apply_op(out, axis_of, inner)
        return tensor - phi + out
    axes = [axis_of[q] for q in op.qubits]
    if isinstance(op, Unitary):
        return apply_flat(tensor, axes, lambda f: op.matrix @ f)
    if isinstance(op, FourierOp):
        fft = np.fft.ifft if op.forward else np.fft.fft
        return apply_flat(tensor, axes, lambda f: fft(f, axis=0, norm="ortho"))
    if isinstance(op, LowRank):
        def lowrank(f):
            coeff = op.src.conj() @ f
            return f + (op.dst - op.src).T @ coeff
        return apply_flat(tensor, axes, lowrank)
    if isinstance(op, Permutation):
        def permute(f):
            out = np.empty_like(f)
            out[op.perm] = f
            return out
        return apply_flat(tensor, axes, permute)
    if isinstance(op, PhaseMask):
        return apply_flat(tensor, axes, lambda f: f * op.mask[:, None])
    raise TypeError(f"cannot apply {op!r} directly")


def ops_matrix(ops: Sequence[Op], m: int) -> np.ndarray:
    """Dense matrix of a closed op list on qubits 0..m-1 (no ancillas)."""
    d = 1 << m
    tensor = np.eye(d, dtype=complex).reshape((2,) * m + (d,))
    axis_of = {q: q for q in range(m)}
    for op in ops:
        tensor = apply_op(tensor, axis_of, op)
    return tensor.reshape(d, d)
