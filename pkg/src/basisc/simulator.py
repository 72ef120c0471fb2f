"""Statevector execution of monomorphized, type-checked kernels.

Reversible functions are first recorded as op traces over local slots
(``Recorder``) and then replayed onto the real state, which makes ``~f``
and ``b & f`` simple transformations of a trace. Everything else is
evaluated directly, left to right.
"""

from __future__ import annotations

import heapq
import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .basis import factored
from .errors import (
    CapacityExceeded, DeadQubit, DegenerateState, DirtyDiscardZ, IndexCollision,
    StuckExpression,
)
from .lowering import (
    embed_op, lower_measure_basis, lower_translation, lower_two_vector, predicate_projectors,
    prep_ops, wire_permutation,
)
from .ops import (
    Alloc, Controlled, GlobalPhase, Op, Permutation, Release, apply_op, inverse_ops,
    oracle_tags, remap,
)
from .syntax import (
    Apply, BitLit, Builtin, Compose, Embed, Flip, Fold, Measure, Node, Phase, Predicate,
    Prep, Program, QubitLit, QubitRef, Reverse, Rotate, Tensor, Translate, UnitLit, Var,
    angle_eval, dim_eval,
)
from .typecheck.checker import Checker, FnTy, _Scope, atoms_of

DEFAULT_CAP = 20
DISCARDZ_TOL = 1e-9
NORM_TOL = 1e-6

Atom = int | str  # a qubit id, or a classical bit "0"/"1"


class RngStream:
    """Uniform draws for one shot, fixed by (seed, shot)."""

    def __init__(self, seed: int, shot: int = 0):
        self.seed = seed
        self.shot = shot
        self.draws = 0
        seq = np.random.SeedSequence([seed % (1 << 64), shot])
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def uniform(self) -> float:
        self.draws += 1
        return float(self._gen.random())


class StateVector:
    """Live qubits as tensor axes; a trailing batch axis is carried along.

    Qubit ids are stable for the lifetime of a qubit. Measured and
    discarded ids are dead until the ancilla pool hands them out again.
    ``step_hook``, when set, is called with the state after every unitary step.
    """

    step_hook = None

    def __init__(self, cap: int = DEFAULT_CAP, rng: RngStream | None = None):
        self.cap = cap
        self.rng = rng
        self.tensor = np.ones((1,), dtype=complex)
        self.ids: list[int] = []
        self.pool: list[int] = []
        self.dead: set[int] = set()
        self.next_id = 0
        self.oracle_calls: Counter = Counter()

    @classmethod
    def identity(cls, k: int, cap: int = DEFAULT_CAP) -> "StateVector":
        """All 2^k basis inputs at once, one per batch column."""
        sv = cls(cap)
        d = 1 << k
        sv.tensor = np.eye(d, dtype=complex).reshape((2,) * k + (d,))
        sv.ids = list(range(k))
        sv.next_id = k
        return sv

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def batch(self) -> int:
        return self.tensor.shape[-1]

    def _axis(self, q: int) -> int:
        try:
            return self.ids.index(q)
        except ValueError:
            if q in self.dead:
                raise DeadQubit(f"qubit {q} was already consumed") from None
            raise DeadQubit(f"qubit {q} was never allocated") from None

    # ----------------------------------------------------------- alloc
    def alloc(self, count: int) -> list[int]:
        if self.n + count > self.cap:
            raise CapacityExceeded(f"{self.n + count} live qubits exceed the cap of {self.cap}")
        out = []
        for _ in range(count):
            if self.pool:
                q = heapq.heappop(self.pool)
                self.dead.discard(q)
            else:
                q = self.next_id
                self.next_id += 1
            self.tensor = np.stack([self.tensor, np.zeros_like(self.tensor)], axis=self.n)
            self.ids.append(q)
            out.append(q)
        return out

    # ----------------------------------------------------------- apply
    def apply(self, op: Op) -> None:
        qubits = op.qubits
        axis_of = {q: self._axis(q) for q in qubits}
        if not isinstance(op, Controlled) and len(axis_of) != len(qubits):
            raise IndexCollision(f"operation names a qubit twice: {qubits}")
        for tag in oracle_tags(op):
            self.oracle_calls[tag] += 1
        self.tensor = apply_op(self.tensor, axis_of, op)
        hook = type(self).step_hook
        if hook is not None:
            hook(self)

    # ------------------------------------------------------- consuming
    def _flat(self, qubits: list[int]) -> tuple[np.ndarray, tuple[int, ...]]:
        axes = [self._axis(q) for q in qubits]
        if len(set(axes)) != len(axes):
            raise IndexCollision(f"qubit named twice: {qubits}")
        moved = np.moveaxis(self.tensor, axes, list(range(len(axes))))
        rest = moved.shape[len(axes):]
        return moved.reshape(1 << len(axes), -1), rest

    def _collapse(self, qubits: list[int], flat: np.ndarray, rest, j: int, scale: float) -> None:
        self.tensor = (flat[j] * scale).reshape(rest)
        for q in qubits:
            self.ids.remove(q)
            self.dead.add(q)
            heapq.heappush(self.pool, q)

    def measure_std(self, qubits: list[int]) -> str:
        """Sample the std-basis outcome of ``qubits`` and consume them."""
        if self.batch != 1:
            raise StuckExpression("cannot measure a batched state")
        flat, rest = self._flat(qubits)
        probs = np.sum(np.abs(flat) ** 2, axis=1)
        total = float(probs.sum())
        if abs(total - 1.0) > NORM_TOL:
            raise DegenerateState(f"outcome probabilities sum to {total}")
        u = self.rng.uniform() if self.rng is not None else 0.0
        cdf = np.cumsum(probs)
        j = int(np.searchsorted(cdf, u * total, side="right"))
        j = min(j, int(np.nonzero(probs)[0][-1]))
        self._collapse(qubits, flat, rest, j, 1.0 / np.sqrt(probs[j]))
        return format(j, f"0{len(qubits)}b") if qubits else ""

    def discard(self, q: int) -> None:
        self.measure_std([q])

    def discardz(self, q: int) -> None:
        flat, rest = self._flat([q])
        mass = np.sum(np.abs(flat[1].reshape(-1, self.batch)) ** 2, axis=0)
        if float(mass.max()) >= DISCARDZ_TOL:
            raise DirtyDiscardZ(f"qubit {q} has |1> weight {float(mass.max()):.3g}")
        scale = 1.0 / np.sqrt(1.0 - float(mass[0])) if self.batch == 1 else 1.0
        self._collapse([q], flat, rest, 0, scale)

    # ---------------------------------------------------------- reading
    def amplitudes(self, order: list[int] | None = None) -> np.ndarray:
        order = list(self.ids) if order is None else list(order)
        if sorted(order) != sorted(self.ids):
            raise StuckExpression("amplitudes requested for a subset of the live qubits")
        flat, _ = self._flat(order)
        return flat[:, 0].copy() if self.batch == 1 else flat

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensor))


class Recorder:
    """A machine that records ops instead of applying them."""

    def __init__(self, inputs: int):
        self.ops: list[Op] = []
        self.next_id = inputs

    def alloc(self, count: int) -> list[int]:
        ids = list(range(self.next_id, self.next_id + count))
        self.next_id += count
        self.ops.append(Alloc(tuple(ids)))
        return ids

    def apply(self, op: Op) -> None:
        self.ops.append(op)

    def measure_std(self, qubits):
        raise StuckExpression("measurement inside a reversible function")

    def discard(self, q):
        raise StuckExpression("discard inside a reversible function")

    def discardz(self, q: int) -> None:
        self.ops.append(Release((q,)))


# ------------------------------------------------------------- lowering

def _inner_allocs(op: Op) -> list[int]:
    if isinstance(op, Alloc):
        return list(op.qubits)
    if isinstance(op, Controlled):
        return [q for o in op.body for q in _inner_allocs(o)]
    return []


def _strip(op: Op) -> Op | None:
    if isinstance(op, (Alloc, Release)):
        return None
    if isinstance(op, Controlled):
        body = tuple(s for s in (_strip(o) for o in op.body) if s is not None)
        return Controlled(op.projectors, body)
    return op


class LoweringCache:
    """Per-program memo of function types and recorded traces."""

    def __init__(self, program: Program):
        self.program = program
        self.checker = Checker(program)
        self.types: dict[Node, FnTy] = {}
        self.traces: dict[Node, tuple[Op, ...]] = {}
        self.local: dict[Node, tuple[Op, ...]] = {}

    def fn_type(self, f: Node) -> FnTy:
        t = self.types.get(f)
        if t is None:
            t = self.checker.expr(f, _Scope(in_rev=True))
            if not isinstance(t, FnTy):
                raise StuckExpression(f"{type(f).__name__} is not a function")
            self.types[f] = t
        return t

    def local_ops(self, f: Node) -> tuple[Op, ...]:
        """Ops of a primitive on its own slots."""
        ops = self.local.get(f)
        if ops is None:
            ops = tuple(self._build_local(f))
            self.local[f] = ops
        return ops

    def _build_local(self, f: Node) -> list[Op]:
        if isinstance(f, Translate):
            return lower_translation(factored(f.src), factored(f.dst))
        if isinstance(f, Measure):
            return lower_measure_basis(factored(f.basis))
        if isinstance(f, Flip):
            return lower_two_vector(f.basis, None)
        if isinstance(f, Rotate):
            return lower_two_vector(f.basis, angle_eval(f.angle))
        if isinstance(f, Prep):
            if isinstance(f.operand, BitLit):
                return prep_ops("".join(str(b) for b in f.operand.bits))
            return prep_ops(f.operand.expanded())
        if isinstance(f, Embed):
            d = self._classical(f.fn)
            inv = self._classical(f.inverse) if f.inverse is not None else None
            return [embed_op(f.kind, d, inv, tag=d.name)]
        if isinstance(f, Predicate):
            return self._predicate(f)
        raise StuckExpression(f"no direct lowering for {type(f).__name__}")

    def _classical(self, e: Node):
        d = self.program.get(e.name) if isinstance(e, Var) else None
        if d is None or not d.is_classical:
            raise StuckExpression("embedding of something other than a classical definition")
        return d

    def _predicate(self, f: Predicate) -> list[Op]:
        b = factored(f.basis)
        m = b.m
        k = len(self.fn_type(f.fn).inp)
        body = self.trace(f.fn)
        if f.mirrored:
            def shift(x):
                return x if x < k else x + m
            projectors = predicate_projectors(b, k)
        else:
            def shift(x):
                return x + m
            projectors = predicate_projectors(b, 0)
        body = tuple(remap(op, shift) for op in body)
        if not projectors:
            return list(body)
        return [Controlled(projectors, body)]

    def trace(self, f: Node) -> tuple[Op, ...]:
        """Ops of a reversible, arity-preserving function on slots 0..k-1."""
        ops = self.traces.get(f)
        if ops is None:
            k = len(self.fn_type(f).inp)
            rec = Recorder(k)
            out = Interpreter(self.program, rec, self).direct(f, list(range(k)))
            ops = list(rec.ops)
            if out != list(range(k)):
                if sorted(out) != list(range(k)):
                    raise StuckExpression("a reversible function must return its own qubits")
                ops.append(Permutation(tuple(range(k)), wire_permutation(k, out)))
            ops = tuple(ops)
            self.traces[f] = ops
        return ops


# ---------------------------------------------------------- interpreter

_FUNCTION_NODES = (Translate, Measure, Builtin, Embed, Predicate, Reverse, Flip, Rotate, Prep, Compose)


class Interpreter:
    """Big-step evaluation of kernel bodies against a machine."""

    def __init__(self, program: Program, machine, cache: LoweringCache | None = None):
        self.program = program
        self.machine = machine
        self.cache = cache or LoweringCache(program)

    def is_function(self, e: Node, env: dict) -> bool:
        if isinstance(e, _FUNCTION_NODES):
            return True
        if isinstance(e, Var):
            return e.name not in env
        if isinstance(e, (Tensor,)):
            return any(self.is_function(i, env) for i in e.items)
        if isinstance(e, (Fold, Phase)):
            return self.is_function(e.expr, env)
        if isinstance(e, Apply):
            return self.is_function(e.arg, env)
        return False

    # ------------------------------------------------------------ data
    def eval(self, e: Node, env: dict[str, list[Atom]]) -> list[Atom]:
        if isinstance(e, QubitLit):
            symbols = e.expanded()
            ids = self.machine.alloc(len(symbols))
            self.replay(prep_ops(symbols), ids)
            return ids
        if isinstance(e, BitLit):
            return [str(b) for b in e.bits]
        if isinstance(e, UnitLit):
            return []
        if isinstance(e, Var):
            if e.name not in env:
                raise StuckExpression(f"{e.name!r} is not a value here")
            return env[e.name]
        if isinstance(e, QubitRef):
            return [e.index]
        if isinstance(e, Tensor):
            return [a for item in e.items for a in self.eval(item, env)]
        if isinstance(e, Fold):
            return [a for _ in range(dim_eval(e.count, {})) for a in self.eval(e.expr, env)]
        if isinstance(e, Phase):
            out = self.eval(e.expr, env)
            self.machine.apply(GlobalPhase(angle_eval(e.angle)))
            return out
        if isinstance(e, Apply):
            if self.is_function(e.arg, env):
                raise StuckExpression("a function cannot be evaluated to data")
            return self.apply(e.fn, self.eval(e.arg, env))
        raise StuckExpression(f"cannot evaluate {type(e).__name__}")

    # ------------------------------------------------------- functions
    def apply(self, f: Node, atoms: list[Atom]) -> list[Atom]:
        t = self.cache.fn_type(f)
        if len(atoms) != len(t.inp):
            raise StuckExpression(f"function takes {len(t.inp)} values, got {len(atoms)}")
        if t.rev and t.inp == t.out and not (isinstance(f, Builtin) and f.name == "id"):
            self.replay(self.cache.trace(f), atoms)
            return list(atoms)
        return self.direct(f, atoms)

    def direct(self, f: Node, atoms: list[Atom]) -> list[Atom]:
        m = self.machine
        if isinstance(f, Builtin):
            if f.name == "id":
                return list(atoms)
            if f.name == "discard":
                m.discard(atoms[0])
            else:
                m.discardz(atoms[0])
            return []
        if isinstance(f, Measure):
            self.replay(self.cache.local_ops(f), atoms)
            return list(m.measure_std(list(atoms)))
        if isinstance(f, (Translate, Flip, Rotate, Prep, Embed, Predicate)):
            self.replay(self.cache.local_ops(f), atoms)
            return list(atoms)
        if isinstance(f, Reverse):
            self.replay(inverse_ops(self.cache.trace(f.fn)), atoms)
            return list(atoms)
        if isinstance(f, Phase):
            out = self.apply(f.expr, atoms)
            m.apply(GlobalPhase(angle_eval(f.angle)))
            return out
        if isinstance(f, Tensor):
            out, pos = [], 0
            for item in f.items:
                if isinstance(item, UnitLit):
                    continue
                k = len(self.cache.fn_type(item).inp)
                out.extend(self.apply(item, atoms[pos:pos + k]))
                pos += k
            return out
        if isinstance(f, Fold):
            k = len(self.cache.fn_type(f.expr).inp)
            out = []
            for i in range(dim_eval(f.count, {})):
                out.extend(self.apply(f.expr, atoms[i * k:(i + 1) * k]))
            return out
        if isinstance(f, Compose):
            for stage in f.stages:
                atoms = self.apply(stage, atoms)
            return atoms
        if isinstance(f, Apply):
            return self.apply(f.fn, self.apply(f.arg, atoms))
        if isinstance(f, Var):
            return self.call(f.name, atoms)
        raise StuckExpression(f"cannot apply {type(f).__name__}")

    def call(self, name: str, atoms: list[Atom]) -> list[Atom]:
        d = self.program.get(name)
        if d is None or d.is_classical:
            raise StuckExpression(f"{name!r} is not a quantum kernel")
        env, pos = {}, 0
        for p in d.params:
            w = len(atoms_of(p.type))
            env[p.name] = list(atoms[pos:pos + w])
            pos += w
        return self.eval(d.body, env)

    def replay(self, ops, atoms: list[Atom]) -> None:
        """Run a slot-level trace with slot i bound to ``atoms[i]``."""
        mapping = dict(enumerate(atoms))
        m = self.machine
        for op in ops:
            if isinstance(op, Alloc):
                mapping.update(zip(op.qubits, m.alloc(len(op.qubits))))
            elif isinstance(op, Release):
                for q in op.qubits:
                    m.discardz(mapping[q])
            elif isinstance(op, Controlled) and _inner_allocs(op):
                fresh = _inner_allocs(op)
                mapping.update(zip(fresh, m.alloc(len(fresh))))
                m.apply(remap(_strip(op), mapping.__getitem__))
                for q in fresh:
                    m.discardz(mapping[q])
            else:
                m.apply(remap(op, mapping.__getitem__))


# ------------------------------------------------------------- running

@dataclass
class Histogram:
    shots: int
    seed: int
    counts: dict[str, int] = field(default_factory=dict)
    oracle_calls: Counter = field(default_factory=Counter)

    def add(self, outcome: str) -> None:
        self.counts[outcome] = self.counts.get(outcome, 0) + 1

    def to_json(self) -> str:
        counts = dict(sorted(self.counts.items()))
        return json.dumps({"shots": self.shots, "counts": counts, "seed": self.seed},
                          sort_keys=True)

    def most_common(self) -> list[tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))


def _entry(program: Program, entry: str | None):
    name = entry or program.entry
    d = program.get(name) if name else None
    if d is None or d.is_classical:
        raise StuckExpression(f"no quantum kernel named {name!r}")
    if d.params:
        raise StuckExpression(f"{name} takes arguments; only closed kernels can be run")
    return d


def run_shot(program: Program, rng: RngStream, cap: int = DEFAULT_CAP, entry: str | None = None,
             cache: LoweringCache | None = None) -> tuple[str, StateVector]:
    d = _entry(program, entry)
    sv = StateVector(cap, rng)
    out = Interpreter(program, sv, cache).eval(d.body, {})
    if any(isinstance(a, int) for a in out):
        raise StuckExpression(f"{d.name} returns qubits; use final_state")
    return "".join(out), sv


def run_kernel(program: Program, shots: int, seed: int, cap: int = DEFAULT_CAP,
               entry: str | None = None) -> Histogram:
    """Run ``shots`` independent shots; shot i draws from RngStream(seed, i)."""
    cache = LoweringCache(program)
    hist = Histogram(shots, seed)
    for shot in range(shots):
        outcome, sv = run_shot(program, RngStream(seed, shot), cap, entry, cache)
        hist.add(outcome)
        hist.oracle_calls.update(sv.oracle_calls)
    return hist


def final_state(program: Program, entry: str | None = None, seed: int = 0,
                cap: int = DEFAULT_CAP) -> np.ndarray:
    """Amplitudes of the qubits returned by a kernel, in return order."""
    d = _entry(program, entry)
    sv = StateVector(cap, RngStream(seed, 0))
    out = Interpreter(program, sv).eval(d.body, {})
    if not all(isinstance(a, int) for a in out):
        raise StuckExpression(f"{d.name} returns classical bits")
    return sv.amplitudes(out)


def lower_function(program: Program, f: Node, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Dense unitary of a reversible function expression (rows: outputs)."""
    cache = LoweringCache(program)
    t = cache.fn_type(f)
    if not t.rev or t.inp != t.out:
        raise StuckExpression("only reversible functions have a unitary")
    k = len(t.inp)
    sv = StateVector.identity(k, cap)
    Interpreter(program, sv, cache).replay(cache.trace(f), list(range(k)))
    return sv.amplitudes(list(range(k)))
