"""Type checking of monomorphized programs.

Types are kept in a flat closed form while checking: a data value is a
tuple of atoms (``"qubit"`` or ``"bit"``), a function is a pair of such
tuples plus a reversibility flag. ``to_type_expr`` converts back to the
surface syntax for reporting.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .. import classical
from ..basis import SYMBOL_FAMILY, basis_size, factored, factored_span_equal
from ..errors import BasiscError, Span, TypeCheckError
from ..syntax import (
    Apply, BasisFold, BasisLit, BasisTensor, Bind, BitLit, BitT, Builtin, Compose,
    Definition, DefRef, Embed, Flip, Fold, Fourier, FuncT, Ij, Instantiate, Measure, Node,
    Phase, Pm, PowT, Predicate, Prep, Program, QubitLit, QubitRef, QubitT, Repeat, Reverse,
    Rotate, Std, Tensor, TensorT, Translate, UnitT, Var, BasisT, DimConst,
    angle_eval, dim_eval, pretty,
)

QUBIT, BIT = "qubit", "bit"


@dataclass(frozen=True)
class DataTy:
    atoms: tuple[str, ...]

    @property
    def linear(self) -> bool:
        return QUBIT in self.atoms


@dataclass(frozen=True)
class FnTy:
    inp: tuple[str, ...]
    out: tuple[str, ...]
    rev: bool
    classical: bool = False


@dataclass(frozen=True)
class BasisTy:
    m: int


Ty = DataTy | FnTy | BasisTy


def _err(code: str, message: str, node: Node | None) -> TypeCheckError:
    return TypeCheckError(code, message, getattr(node, "span", None))


# ------------------------------------------------------------------ types

def atoms_of(t: Node) -> tuple[str, ...]:
    """Flatten a closed data type to its atoms."""
    if isinstance(t, QubitT):
        return (QUBIT,)
    if isinstance(t, BitT):
        return (BIT,)
    if isinstance(t, UnitT):
        return ()
    if isinstance(t, TensorT):
        return tuple(a for i in t.items for a in atoms_of(i))
    if isinstance(t, PowT):
        return atoms_of(t.base) * dim_eval(t.count, {})
    raise _err("ArityMismatch", "functions and bases cannot be passed as data", t)


def _type_of_decl(t: Node) -> Ty:
    if isinstance(t, FuncT):
        return FnTy(atoms_of(t.inp), atoms_of(t.out), t.rev)
    if isinstance(t, BasisT):
        return BasisTy(dim_eval(t.dim, {}))
    return DataTy(atoms_of(t))


def to_type_expr(t: Ty) -> Node:
    """Surface form of a checked type, with runs of equal atoms folded."""
    if isinstance(t, BasisTy):
        return BasisT(DimConst(t.m))
    if isinstance(t, FnTy):
        return FuncT(_fn_side(t.inp), _fn_side(t.out), t.rev)
    return _atoms_expr(t.atoms)


def _fn_side(atoms: tuple[str, ...]) -> Node:
    if not atoms:
        return UnitT()
    if len(set(atoms)) == 1:
        base = BitT() if atoms and atoms[0] == BIT else QubitT()
        return PowT(base, DimConst(len(atoms)))
    return _atoms_expr(atoms)


def _atoms_expr(atoms: tuple[str, ...]) -> Node:
    runs: list[list] = []
    for a in atoms:
        if runs and runs[-1][0] == a:
            runs[-1][1] += 1
        else:
            runs.append([a, 1])
    items = []
    for a, n in runs:
        base = QubitT() if a == QUBIT else BitT()
        items.append(base if n == 1 else PowT(base, DimConst(n)))
    if not items:
        return UnitT()
    return items[0] if len(items) == 1 else TensorT(tuple(items))


# ------------------------------------------------------------------ bases

def check_basis(b: Node) -> int:
    """Validate a closed basis expression; returns its qubit count."""
    if isinstance(b, (Std, Pm, Ij)):
        return 1
    if isinstance(b, Fourier):
        return dim_eval(b.dim, {})
    if isinstance(b, BasisTensor):
        return sum(check_basis(i) for i in b.items)
    if isinstance(b, BasisFold):
        return check_basis(b.basis) * dim_eval(b.count, {})
    if isinstance(b, BasisLit):
        return _check_literal(b)
    raise _err("NotABasis", f"{type(b).__name__} is not a basis", b)


def _check_literal(b: BasisLit) -> int:
    if not b.vectors:
        raise _err("NotABasis", "a basis literal needs at least one vector", b)
    strings = [v.literal.expanded() for v in b.vectors]
    m = len(strings[0])
    for s, v in zip(strings, b.vectors):
        if len(s) != m:
            raise _err("DimMismatch", f"basis vectors of lengths {m} and {len(s)}", v)
    families = {SYMBOL_FAMILY[c] for s in strings for c in s}
    if len(families) > 1:
        raise _err("MixedEigenbasis", "basis vectors mix symbols from "
                   + ", ".join(sorted(families)), b)
    # within one family distinct strings are orthogonal, so equality of the
    # symbol strings is exactly equality up to phase
    seen: dict[str, BasisLit] = {}
    for s, v in zip(strings, b.vectors):
        angle_eval(v.angle)
        if s in seen:
            raise _err("DuplicateBasisVector", f"'{s}' appears twice", v)
        seen[s] = v
    return m


def check_translation(b1: Node, b2: Node) -> int:
    m1, m2 = check_basis(b1), check_basis(b2)
    if m1 != m2:
        raise _err("DimMismatch", f"translation from {m1} to {m2} qubits", b2)
    if basis_size(b1) != basis_size(b2):
        raise _err("SpanMismatch", f"{basis_size(b1)} vectors cannot map onto {basis_size(b2)}", b2)
    if not factored_span_equal(factored(b1), factored(b2)):
        raise _err("SpanMismatch", "the two bases span different subspaces", b2)
    return m1


def check_measure(b: Node) -> int:
    m = check_basis(b)
    if basis_size(b) != 1 << m:
        raise _err("IncompleteMeasureBasis",
                   f"{basis_size(b)} vectors cannot resolve {m} qubits", b)
    return m


# ------------------------------------------------------------ expressions

@dataclass
class _Scope:
    """Bindings of one kernel body plus linear-use bookkeeping."""

    locals: dict[str, DataTy] = field(default_factory=dict)
    uses: Counter = field(default_factory=Counter)
    indices: set[int] = field(default_factory=set)
    in_rev: bool = False


class Checker:
    def __init__(self, program: Program | None = None):
        self.program = program or Program(())
        self.types: dict[str, FnTy] = {}
        self.active: set[str] = set()

    # ----------------------------------------------------------- program
    def check_program(self) -> dict[str, Node]:
        for d in self.program.definitions:
            self.definition_type(d.name, d.span)
        return {name: to_type_expr(t) for name, t in self.types.items()}

    def definition_type(self, name: str, span: Span | None) -> FnTy:
        if name in self.types:
            return self.types[name]
        d = self.program.get(name)
        if d is None:
            raise TypeCheckError("UnknownName", f"no definition named {name!r}", span)
        if name in self.active:
            raise TypeCheckError("ArityMismatch", f"{name} refers to itself", span)
        self.active.add(name)
        try:
            t = self._check_definition(d)
        finally:
            self.active.discard(name)
        self.types[name] = t
        return t

    def _check_definition(self, d: Definition) -> FnTy:
        if d.dims or d.captures:
            raise TypeCheckError("UnboundDimVar", f"{d.name} is not monomorphized", d.span)
        inp = tuple(a for p in d.params for a in atoms_of(p.type))
        out = atoms_of(d.ret)
        if d.is_classical:
            if QUBIT in inp + out:
                raise TypeCheckError("ArityMismatch", "classical functions take and return bits", d.span)
            try:
                classical.check_widths(d)
            except BasiscError as exc:
                raise TypeCheckError("DimMismatch", str(exc), d.span) from None
            return FnTy(inp, out, False, classical=True)
        if d.rev and inp != out:
            raise TypeCheckError("NotReversible",
                                 f"rev kernel {d.name} must return what it takes", d.span)
        scope = _Scope(in_rev=d.rev)
        for p in d.params:
            scope.locals[p.name] = DataTy(atoms_of(p.type))
        body = self.expr(d.body, scope)
        if not isinstance(body, DataTy):
            raise TypeCheckError("ArityMismatch", f"body of {d.name} is not a value", d.body.span)
        if body.atoms != out:
            raise TypeCheckError("DimMismatch",
                                 f"{d.name} returns {_show(body.atoms)}, declared {_show(out)}", d.body.span)
        self._check_linear_uses(scope, d)
        return FnTy(inp, out, d.rev)

    def _check_linear_uses(self, scope: _Scope, where: Node) -> None:
        for name, t in scope.locals.items():
            if t.linear and scope.uses[name] != 1:
                how = "never used" if scope.uses[name] == 0 else f"used {scope.uses[name]} times"
                raise TypeCheckError("LinearityViolation", f"qubit binding {name!r} is {how}",
                                     getattr(where, "span", None))

    # ------------------------------------------------------- expressions
    def expr(self, e: Node, scope: _Scope) -> Ty:
        method = getattr(self, "_" + type(e).__name__, None)
        if method is None:
            if isinstance(e, (Std, Pm, Ij, Fourier, BasisLit, BasisTensor, BasisFold)):
                return BasisTy(check_basis(e))
            raise _err("ArityMismatch", f"unexpected {type(e).__name__} in an expression", e)
        return method(e, scope)

    def _fn(self, e: Node, scope: _Scope) -> FnTy:
        t = self.expr(e, scope)
        if not isinstance(t, FnTy):
            raise _err("ArityMismatch", "expected a function", e)
        return t

    def _UnitLit(self, e, scope):
        return DataTy(())

    def _BitLit(self, e, scope):
        return DataTy((BIT,) * len(e.bits))

    def _QubitLit(self, e, scope):
        return DataTy((QUBIT,) * len(e.expanded()))

    def _QubitRef(self, e: QubitRef, scope):
        if e.index in scope.indices:
            raise _err("LinearityViolation", f"qubit index {e.index} used twice", e)
        scope.indices.add(e.index)
        return DataTy((QUBIT,))

    def _Var(self, e: Var, scope):
        if e.name in scope.locals:
            scope.uses[e.name] += 1
            return scope.locals[e.name]
        return self.definition_type(e.name, e.span)

    def _DefRef(self, e: DefRef, scope):
        return self.definition_type(e.name, e.span)

    def _Builtin(self, e: Builtin, scope):
        if e.name == "id":
            return FnTy((QUBIT,), (QUBIT,), True)
        if e.name == "discard":
            return FnTy((QUBIT,), (), False)
        if not scope.in_rev:
            raise _err("NotReversible", "discardz is only allowed inside rev kernels", e)
        return FnTy((QUBIT,), (), True)

    def _Tensor(self, e: Tensor, scope):
        parts = [self.expr(i, scope) for i in e.items]
        if all(isinstance(p, DataTy) for p in parts):
            return DataTy(tuple(a for p in parts for a in p.atoms))
        # units may sit next to functions without changing them
        fns = [p for p in parts if not (isinstance(p, DataTy) and not p.atoms)]
        if all(isinstance(p, FnTy) and not p.classical for p in fns):
            return FnTy(tuple(a for p in fns for a in p.inp), tuple(a for p in fns for a in p.out),
                        all(p.rev for p in fns))
        if all(isinstance(p, BasisTy) for p in parts):
            return BasisTy(sum(p.m for p in parts))
        raise _err("ArityMismatch", "cannot tensor values with functions", e)

    def _Fold(self, e: Fold, scope):
        n = dim_eval(e.count, {})
        if _is_literal(e.expr):
            inner = self.expr(e.expr, scope)
        else:
            inner = self.expr(e.expr, scope)
            if isinstance(inner, DataTy) and inner.linear:
                raise _err("LinearityViolation", "folding a qubit value would copy it", e)
        if isinstance(inner, DataTy):
            return DataTy(inner.atoms * n)
        if isinstance(inner, BasisTy):
            return BasisTy(inner.m * n)
        if inner.classical:
            raise _err("ArityMismatch", "classical functions cannot be folded", e)
        return FnTy(inner.inp * n, inner.out * n, inner.rev)

    def _Phase(self, e: Phase, scope):
        angle_eval(e.angle)
        inner = self.expr(e.expr, scope)
        if isinstance(inner, FnTy):
            if not inner.rev or inner.classical:
                raise _err("NotReversible", "a phase applies only to reversible functions", e)
            return inner
        if isinstance(inner, BasisTy):
            raise _err("NotABasis", "a phased basis is not an expression", e)
        return inner

    def _Translate(self, e: Translate, scope):
        m = check_translation(e.src, e.dst)
        return FnTy((QUBIT,) * m, (QUBIT,) * m, True)

    def _Measure(self, e: Measure, scope):
        m = check_measure(e.basis)
        return FnTy((QUBIT,) * m, (BIT,) * m, False)

    def _Flip(self, e: Flip, scope):
        m = check_basis(e.basis)
        if basis_size(e.basis) != 2:
            raise _err("FlipArity", f".flip needs two basis vectors, got {basis_size(e.basis)}", e)
        return FnTy((QUBIT,) * m, (QUBIT,) * m, True)

    def _Rotate(self, e: Rotate, scope):
        m = check_basis(e.basis)
        angle_eval(e.angle)
        if basis_size(e.basis) != 2:
            raise _err("FlipArity", f".rotate needs two basis vectors, got {basis_size(e.basis)}", e)
        return FnTy((QUBIT,) * m, (QUBIT,) * m, True)

    def _Prep(self, e: Prep, scope):
        if isinstance(e.operand, BitLit):
            n = len(e.operand.bits)
        elif isinstance(e.operand, QubitLit):
            n = len(e.operand.expanded())
        else:
            raise _err("ArityMismatch", ".prep needs a literal", e)
        return FnTy((QUBIT,) * n, (QUBIT,) * n, True)

    def _Predicate(self, e: Predicate, scope):
        m = check_basis(e.basis)
        body = self._fn(e.fn, scope)
        if not body.rev or body.classical:
            raise _err("NotReversible", "only reversible functions can be predicated", e.fn)
        if body.inp != body.out:
            raise _err("NotReversible", "a predicated function must keep its qubits", e.fn)
        return FnTy((QUBIT,) * m + body.inp, (QUBIT,) * m + body.out, True)

    def _Reverse(self, e: Reverse, scope):
        body = self._fn(e.fn, scope)
        if not body.rev or body.classical:
            raise _err("NotReversible", "only reversible functions can be reversed", e)
        return FnTy(body.out, body.inp, True)

    def _Embed(self, e: Embed, scope):
        f = self._classical(e.fn, scope)
        n_in, n_out = len(f.inp), len(f.out)
        if e.kind == "xor":
            n = n_in + n_out
        elif e.kind == "phase":
            if n_out != 1:
                raise _err("DimMismatch", f".phase needs one output bit, got {n_out}", e)
            n = n_in
        else:
            if n_in != n_out:
                raise _err("DimMismatch", ".inplace needs as many outputs as inputs", e)
            if e.inverse is None:
                raise _err("ArityMismatch", ".inplace needs an inverse", e)
            g = self._classical(e.inverse, scope)
            if (g.inp, g.out) != (f.out, f.inp):
                raise _err("DimMismatch", "the inverse has the wrong signature", e.inverse)
            n = n_in
        return FnTy((QUBIT,) * n, (QUBIT,) * n, True)

    def _classical(self, e: Node, scope) -> FnTy:
        t = self.expr(e, scope)
        if not (isinstance(t, FnTy) and t.classical):
            raise _err("ArityMismatch", "embeddings need a classical function", e)
        return t

    def _Apply(self, e: Apply, scope):
        arg = self.expr(e.arg, scope)
        if isinstance(e.fn, Compose):
            return self._thread(e.fn.stages, arg, scope, e)
        fn = self._fn(e.fn, scope)
        return self._apply(fn, arg, scope, e)

    def _apply(self, fn: FnTy, arg: Ty, scope: _Scope, where: Node) -> Ty:
        if fn.classical:
            raise _err("ArityMismatch", "classical functions must be embedded before use", where)
        if isinstance(arg, FnTy):
            # f | g composes
            if arg.classical:
                raise _err("ArityMismatch", "classical functions must be embedded before use", where)
            if arg.out != fn.inp:
                raise _err("DimMismatch", f"cannot compose {_show(arg.out)} into {_show(fn.inp)}", where)
            return FnTy(arg.inp, fn.out, arg.rev and fn.rev)
        if isinstance(arg, BasisTy):
            raise _err("ArityMismatch", "a basis cannot be passed to a function", where)
        if arg.atoms != fn.inp:
            raise _err("DimMismatch", f"function takes {_show(fn.inp)}, given {_show(arg.atoms)}", where)
        if scope.in_rev and not fn.rev:
            raise _err("NotReversible", "irreversible operation inside a rev kernel", where)
        return DataTy(fn.out)

    def _thread(self, stages, arg: Ty, scope: _Scope, where: Node) -> Ty:
        for stage in stages:
            if isinstance(stage, Compose):
                arg = self._thread(stage.stages, arg, scope, stage)
            else:
                arg = self._apply(self._fn(stage, scope), arg, scope, stage)
        return arg

    def _Compose(self, e: Compose, scope):
        if not e.stages:
            raise _err("ArityMismatch", "an empty repetition has no type of its own", e)
        first = self._fn(e.stages[0], scope)
        return self._thread(e.stages[1:], first, scope, e)

    def _Repeat(self, e: Repeat, scope):
        raise _err("UnboundDimVar", "repeat must be unrolled before checking", e)

    def _Instantiate(self, e: Instantiate, scope):
        raise _err("UnboundDimVar", "instantiation left after monomorphization", e)

    def _Bind(self, e: Bind, scope):
        raise _err("UnboundDimVar", "capture binding left after monomorphization", e)


def _is_literal(e: Node) -> bool:
    if isinstance(e, (QubitLit, BitLit)):
        return True
    if isinstance(e, Tensor):
        return all(_is_literal(i) for i in e.items)
    if isinstance(e, Phase):
        return _is_literal(e.expr)
    return False


def _show(atoms: tuple[str, ...]) -> str:
    return pretty(_atoms_expr(atoms))


# -------------------------------------------------------------- front door

def check_program(p: Program) -> dict[str, Node]:
    """Type every definition of a monomorphized program."""
    return Checker(p).check_program()


def check_expression(e: Node, program: Program | None = None,
                     env: dict[str, Node] | None = None, rev: bool = False) -> Node:
    """Type a closed expression; ``env`` gives types of free variables.

    Every linear variable in ``env`` must be used exactly once.
    """
    checker = Checker(program)
    scope = _Scope(in_rev=rev)
    for name, t in (env or {}).items():
        scope.locals[name] = DataTy(atoms_of(t))
    t = checker.expr(e, scope)
    checker._check_linear_uses(scope, e)
    return to_type_expr(t)


def expression_type(e: Node, program: Program | None = None, rev: bool = False) -> Ty:
    """Internal flat type of a closed expression (used by the interpreters)."""
    return Checker(program).expr(e, _Scope(in_rev=rev))
