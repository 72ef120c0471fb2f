"""Classical functions: evaluation, truth tables and quantum embeddings.

Evaluation is vectorized: a value of width w over a batch of B inputs is a
(w, B) array of 0/1 bytes, so a whole truth table costs one pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NotABijection, PhaseNeedsOneOutput, TableTooLarge, WidthMismatch
from .syntax import (
    BitT, CBinOp, CBits, CConcat, CConst, CDim, CEquals, CIndex, CMulMod, CNot, CReduce,
    CRotate, CSlice, CVar, CZeroExtend, Definition, PowT, TensorT, UnitT,
    dim_eval,
)

TABLE_CAP = 20


def type_bits(t) -> int:
    """Width of a closed bit type."""
    if isinstance(t, BitT):
        return 1
    if isinstance(t, PowT) and isinstance(t.base, BitT):
        return dim_eval(t.count, {})
    if isinstance(t, TensorT):
        return sum(type_bits(i) for i in t.items)
    if isinstance(t, UnitT):
        return 0
    raise WidthMismatch(f"not a bit type: {t!r}")


def input_width(f: Definition) -> int:
    return sum(type_bits(p.type) for p in f.params)


def output_width(f: Definition) -> int:
    return type_bits(f.ret)


def _static(d) -> int:
    return dim_eval(d, {})


def _to_int(x: np.ndarray) -> np.ndarray:
    w = x.shape[0]
    weights = (1 << np.arange(w - 1, -1, -1, dtype=np.int64))
    return weights @ x.astype(np.int64)


def _from_int(v: np.ndarray, w: int) -> np.ndarray:
    shifts = np.arange(w - 1, -1, -1, dtype=np.int64)
    return ((v[None, :] >> shifts[:, None]) & 1).astype(np.uint8)


class _Evaluator:
    def __init__(self, env: dict[str, np.ndarray], batch: int):
        self.env = env
        self.batch = batch

    def eval(self, e) -> np.ndarray:
        method = getattr(self, "_" + type(e).__name__, None)
        if method is None:
            raise WidthMismatch(f"{type(e).__name__} is not a bit-valued expression")
        return method(e)

    def _CVar(self, e: CVar):
        if e.name not in self.env:
            raise WidthMismatch(f"unknown classical input {e.name!r}")
        return self.env[e.name]

    def _CBits(self, e: CBits):
        return np.repeat(np.array(e.bits, dtype=np.uint8)[:, None], self.batch, axis=1)

    def _CConst(self, e: CConst):
        w, v = _static(e.width), _static(e.value)
        if v >= 1 << w:
            raise WidthMismatch(f"{v} does not fit in {w} bits")
        return _from_int(np.full(self.batch, v, dtype=np.int64), w)

    def _CDim(self, e: CDim):
        raise WidthMismatch("an integer is not a bit string; use bit[W](V)")

    def _CIndex(self, e: CIndex):
        x = self.eval(e.operand)
        i = _static(e.index)
        if i >= x.shape[0]:
            raise WidthMismatch(f"index {i} out of range for width {x.shape[0]}")
        return x[i:i + 1]

    def _CSlice(self, e: CSlice):
        x = self.eval(e.operand)
        lo, hi = _static(e.lo), _static(e.hi)
        if not 0 <= lo <= hi <= x.shape[0]:
            raise WidthMismatch(f"slice [{lo}:{hi}] out of range for width {x.shape[0]}")
        return x[lo:hi]

    def _CNot(self, e: CNot):
        return 1 - self.eval(e.operand)

    def _CBinOp(self, e: CBinOp):
        a, b = self.eval(e.left), self.eval(e.right)
        if a.shape[0] != b.shape[0]:
            raise WidthMismatch(f"'{e.op}' on widths {a.shape[0]} and {b.shape[0]}")
        if e.op == "&":
            return a & b
        if e.op == "|":
            return a | b
        return a ^ b

    def _CConcat(self, e: CConcat):
        return np.concatenate([self.eval(i) for i in e.items], axis=0)

    def _CRotate(self, e: CRotate):
        x = self.eval(e.operand)
        w = x.shape[0]
        sign = 1 if e.direction == "rotl" else -1
        if isinstance(e.amount, CDim):
            k = _static(e.amount.dim)
            return np.roll(x, -sign * k, axis=0) if w else x
        amount = _to_int(self.eval(e.amount))
        idx = (np.arange(w)[:, None] + sign * amount[None, :]) % max(w, 1)
        return np.take_along_axis(x, idx, axis=0)

    def _CReduce(self, e: CReduce):
        x = self.eval(e.operand)
        if e.op == "xor":
            out = x.sum(axis=0) % 2
        elif e.op == "and":
            out = x.all(axis=0)
        else:
            out = x.any(axis=0)
        return out.astype(np.uint8)[None, :]

    def _CZeroExtend(self, e: CZeroExtend):
        x = self.eval(e.operand)
        w = _static(e.width)
        if w < x.shape[0]:
            raise WidthMismatch(f"cannot zero-extend width {x.shape[0]} to {w}")
        pad = np.zeros((w - x.shape[0], x.shape[1]), dtype=np.uint8)
        return np.concatenate([pad, x], axis=0)

    def _CEquals(self, e: CEquals):
        x = self.eval(e.operand)
        return (_to_int(x) == _static(e.value)).astype(np.uint8)[None, :]

    def _CMulMod(self, e: CMulMod):
        x = self.eval(e.operand)
        w = x.shape[0]
        modulus = _static(e.modulus)
        if modulus == 0 or modulus > 1 << w:
            raise WidthMismatch(f"modulus {modulus} does not suit a {w}-bit register")
        factor = _static(e.factor) % modulus
        v = _to_int(x)
        # residues are multiplied; values >= modulus are left alone so the map
        # stays a bijection on the whole register when factor is invertible
        out = np.where(v < modulus, (v * factor) % modulus, v)
        return _from_int(out, w)


def eval_batch(f: Definition, inputs: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` column-wise on an (n_in, B) array of bits."""
    n_in = input_width(f)
    if inputs.shape[0] != n_in:
        raise WidthMismatch(f"{f.name} takes {n_in} bits, got {inputs.shape[0]}")
    env, pos = {}, 0
    for p in f.params:
        w = type_bits(p.type)
        env[p.name] = inputs[pos:pos + w].astype(np.uint8)
        pos += w
    out = _Evaluator(env, inputs.shape[1]).eval(f.body)
    if out.shape[0] != output_width(f):
        raise WidthMismatch(f"{f.name} returns {out.shape[0]} bits, declared {output_width(f)}")
    return out


def eval_classical(f: Definition, x: str | Sequence[int]) -> str:
    """Run ``f`` on one bit string, most significant bit first."""
    bits = np.array([int(c) for c in x], dtype=np.uint8).reshape(-1, 1)
    out = eval_batch(f, bits)
    return "".join(str(int(b)) for b in out[:, 0])


def check_widths(f: Definition) -> None:
    """Raise WidthMismatch unless the body is consistent with the signature."""
    eval_batch(f, np.zeros((input_width(f), 1), dtype=np.uint8))


@dataclass(frozen=True, eq=False)
class TruthTable:
    n_in: int
    n_out: int
    outputs: np.ndarray  # output word for each input index

    def __call__(self, x: int) -> int:
        return int(self.outputs[x])


def all_inputs(n: int) -> np.ndarray:
    return _from_int(np.arange(1 << n, dtype=np.int64), n)


def truth_table(f: Definition, cap: int = TABLE_CAP) -> TruthTable:
    n_in = input_width(f)
    if n_in > cap:
        raise TableTooLarge(f"{f.name} has {n_in} input bits; the cap is {cap}")
    out = eval_batch(f, all_inputs(n_in))
    return TruthTable(n_in, out.shape[0], _to_int(out))


def table_from_words(n_in: int, n_out: int, words: Sequence[int]) -> TruthTable:
    return TruthTable(n_in, n_out, np.asarray(words, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class EmbeddingAction:
    kind: str  # xor | phase | inplace
    width: int
    perm: np.ndarray | None = None
    mask: np.ndarray | None = None

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        if self.kind == "phase":
            return amplitudes * self.mask
        out = np.empty_like(amplitudes)
        out[self.perm] = amplitudes
        return out

    def matrix(self) -> np.ndarray:
        d = 1 << self.width
        if self.kind == "phase":
            return np.diag(self.mask.astype(complex))
        mat = np.zeros((d, d))
        mat[self.perm, np.arange(d)] = 1
        return mat


def xor_embedding(t: TruthTable) -> EmbeddingAction:
    """(x, y) -> (x, y ^ f(x)) over n_in + n_out qubits."""
    idx = np.arange(1 << (t.n_in + t.n_out), dtype=np.int64)
    x = idx >> t.n_out
    return EmbeddingAction("xor", t.n_in + t.n_out, perm=idx ^ t.outputs[x])


def phase_embedding(t: TruthTable) -> EmbeddingAction:
    if t.n_out != 1:
        raise PhaseNeedsOneOutput(f"phase embedding needs one output bit, got {t.n_out}")
    return EmbeddingAction("phase", t.n_in, mask=1 - 2 * t.outputs.astype(np.int64))


def inplace_embedding(fwd: TruthTable, inv: TruthTable) -> EmbeddingAction:
    if not (fwd.n_in == fwd.n_out == inv.n_in == inv.n_out):
        raise NotABijection("in-place embedding needs equal input and output widths")
    x = np.arange(1 << fwd.n_in)
    bad = np.nonzero(inv.outputs[fwd.outputs] != x)[0]
    if bad.size:
        raise NotABijection(f"supplied inverse fails at input {int(bad[0])}")
    return EmbeddingAction("inplace", fwd.n_in, perm=fwd.outputs.copy())
