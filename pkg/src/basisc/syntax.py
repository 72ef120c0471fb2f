"""Abstract syntax shared by every pass.

All nodes are frozen dataclasses, so structural equality and hashing come
for free. Source spans are carried along for diagnostics but excluded
from comparison.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

from .errors import NegativeDim, Span, UnboundDimVar

_SPAN = dict(default=None, compare=False, repr=False)


class Node:
    """Marker base for every AST node."""

    __slots__ = ()


# ---------------------------------------------------------------- dimensions

@dataclass(frozen=True)
class DimConst(Node):
    value: int
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class DimVar(Node):
    name: str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class DimBinOp(Node):
    op: str  # one of + - * ** // %
    left: "DimExpr"
    right: "DimExpr"
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class DimHole(Node):
    """The ``...`` placeholder inside ``name[[...]]``: a dimension left open."""

    span: Span | None = field(**_SPAN)


DimExpr = Union[DimConst, DimVar, DimBinOp]

_DIM_OPS: dict[str, Callable[[int, int], int]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "**": lambda a, b: a ** b,
    "//": lambda a, b: a // b,
    "%": lambda a, b: a % b,
}


def dim_free_vars(d: DimExpr) -> set[str]:
    if isinstance(d, DimVar):
        return {d.name}
    if isinstance(d, DimBinOp):
        return dim_free_vars(d.left) | dim_free_vars(d.right)
    return set()


def _dim_raw(d: DimExpr, env: Mapping[str, int]) -> int:
    if isinstance(d, DimConst):
        return d.value
    if isinstance(d, DimVar):
        if d.name not in env:
            raise UnboundDimVar(d.name, d.span)
        return env[d.name]
    if isinstance(d, DimBinOp):
        left, right = _dim_raw(d.left, env), _dim_raw(d.right, env)
        if d.op == "**" and right < 0:
            raise NegativeDim("negative exponent in dimension expression", d.span)
        if d.op in ("//", "%") and right == 0:
            raise NegativeDim("division by zero in dimension expression", d.span)
        return _DIM_OPS[d.op](left, right)
    raise TypeError(f"not a dimension expression: {d!r}")


def dim_eval(d: DimExpr, env: Mapping[str, int]) -> int:
    """Evaluate ``d`` under ``env``; the result must be non-negative."""
    value = _dim_raw(d, env)
    if value < 0:
        raise NegativeDim(f"dimension {pretty(d)} evaluates to {value}", d.span)
    return value


def dim_subst(d: DimExpr, env: Mapping[str, int]) -> DimExpr:
    """Substitute what ``env`` binds, folding to a constant when closed."""
    if not dim_free_vars(d) - env.keys():
        return DimConst(dim_eval(d, env), d.span)
    if isinstance(d, DimBinOp):
        return DimBinOp(d.op, dim_subst(d.left, env), dim_subst(d.right, env), d.span)
    return d


# -------------------------------------------------------------------- angles

@dataclass(frozen=True)
class AngleConst(Node):
    value: float
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class AnglePi(Node):
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class AngleDim(Node):
    """A dimension variable used as a real number."""

    dim: DimExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class AngleNeg(Node):
    operand: "AngleExpr"
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class AngleBinOp(Node):
    op: str  # one of + - * / **
    left: "AngleExpr"
    right: "AngleExpr"
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class PhaseRef(Node):
    """``phases[k]``: an entry of the externally supplied phase schedule."""

    index: DimExpr
    span: Span | None = field(**_SPAN)


AngleExpr = Union[AngleConst, AnglePi, AngleDim, AngleNeg, AngleBinOp, PhaseRef]

_ANGLE_OPS: dict[str, Callable[[float, float], float]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "**": lambda a, b: a ** b,
}


class PhaseIndexError(UnboundDimVar):
    def __init__(self, index: int, available: int, span: Span | None = None):
        super().__init__(f"phases[{index}]", span)
        self.args = (f"phase schedule has {available} entries, phases[{index}] requested",)


def angle_eval(a: AngleExpr, env: Mapping[str, int] = {},
               phases: Sequence[float] | None = None) -> float:
    if isinstance(a, AngleConst):
        return a.value
    if isinstance(a, AnglePi):
        return math.pi
    if isinstance(a, AngleDim):
        return float(_dim_raw(a.dim, env))
    if isinstance(a, AngleNeg):
        return -angle_eval(a.operand, env, phases)
    if isinstance(a, AngleBinOp):
        return _ANGLE_OPS[a.op](angle_eval(a.left, env, phases), angle_eval(a.right, env, phases))
    if isinstance(a, PhaseRef):
        k = _dim_raw(a.index, env)
        if phases is None or not 0 <= k < len(phases):
            raise PhaseIndexError(k, 0 if phases is None else len(phases), a.span)
        return float(phases[k])
    raise TypeError(f"not an angle: {a!r}")


def angle_closed(a: AngleExpr, env: Mapping[str, int], has_phases: bool) -> bool:
    if isinstance(a, (AngleConst, AnglePi)):
        return True
    if isinstance(a, AngleDim):
        return not dim_free_vars(a.dim) - env.keys()
    if isinstance(a, AngleNeg):
        return angle_closed(a.operand, env, has_phases)
    if isinstance(a, AngleBinOp):
        return angle_closed(a.left, env, has_phases) and angle_closed(a.right, env, has_phases)
    if isinstance(a, PhaseRef):
        return has_phases and not dim_free_vars(a.index) - env.keys()
    return False


# --------------------------------------------------------------------- types

@dataclass(frozen=True)
class QubitT(Node):
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class BitT(Node):
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class BasisT(Node):
    dim: DimExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class UnitT(Node):
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class TensorT(Node):
    items: tuple["TypeExpr", ...]
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class PowT(Node):
    base: "TypeExpr"
    count: DimExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class FuncT(Node):
    inp: "TypeExpr"
    out: "TypeExpr"
    rev: bool
    span: Span | None = field(**_SPAN)


TypeExpr = Union[QubitT, BitT, BasisT, UnitT, TensorT, PowT, FuncT]


def type_has_qubit(t: TypeExpr) -> bool:
    if isinstance(t, QubitT):
        return True
    if isinstance(t, TensorT):
        return any(type_has_qubit(i) for i in t.items)
    if isinstance(t, PowT):
        return type_has_qubit(t.base)
    return False


# ---------------------------------------------------------------------- bases

@dataclass(frozen=True)
class Std(Node):
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Pm(Node):
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Ij(Node):
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Fourier(Node):
    dim: DimExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class QubitLit(Node):
    """A qubit literal such as ``'+'[N]``; ``fold`` repeats the symbols."""

    symbols: str
    fold: DimExpr = DimConst(1)
    span: Span | None = field(**_SPAN)

    def expanded(self) -> str:
        if not isinstance(self.fold, DimConst):
            raise UnboundDimVar(next(iter(dim_free_vars(self.fold))), self.span)
        return self.symbols * self.fold.value


@dataclass(frozen=True)
class BasisVector(Node):
    angle: AngleExpr
    literal: QubitLit
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class BasisLit(Node):
    vectors: tuple[BasisVector, ...]
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class BasisTensor(Node):
    items: tuple["BasisExpr", ...]
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class BasisFold(Node):
    basis: "BasisExpr"
    count: DimExpr
    span: Span | None = field(**_SPAN)


BasisExpr = Union[Std, Pm, Ij, Fourier, BasisLit, BasisTensor, BasisFold]
BASIS_NODES = (Std, Pm, Ij, Fourier, BasisLit, BasisTensor, BasisFold)


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True)
class UnitLit(Node):
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Builtin(Node):
    name: str  # id | discard | discardz
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class BitLit(Node):
    bits: tuple[int, ...]
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class BitConst(Node):
    """``bit[W](V)``: the integer V as a W-bit string, most significant first."""

    width: DimExpr
    value: DimExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Var(Node):
    name: str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class DefRef(Node):
    """A reference to a closed (specialized) definition."""

    name: str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class QubitRef(Node):
    """A live qubit index; appears only in runtime configurations."""

    index: int
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Tensor(Node):
    items: tuple["Expr", ...]
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Fold(Node):
    expr: "Expr"
    count: DimExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Phase(Node):
    angle: AngleExpr
    expr: "Expr"
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Translate(Node):
    src: BasisExpr
    dst: BasisExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Measure(Node):
    basis: BasisExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Predicate(Node):
    basis: BasisExpr
    fn: "Expr"
    mirrored: bool = False
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Reverse(Node):
    fn: "Expr"
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Flip(Node):
    basis: BasisExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Rotate(Node):
    basis: BasisExpr
    angle: AngleExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Prep(Node):
    operand: "Expr"
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Embed(Node):
    kind: str  # xor | phase | inplace
    fn: "Expr"
    inverse: "Expr | None" = None
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Instantiate(Node):
    target: "Expr"
    dims: tuple["DimExpr | DimHole", ...]
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Bind(Node):
    """``f(a, b)``: bind the captures of ``f`` positionally."""

    target: "Expr"
    args: tuple["Expr", ...]
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Apply(Node):
    fn: "Expr"
    arg: "Expr"
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Repeat(Node):
    var: str
    lo: DimExpr
    hi: DimExpr
    stages: tuple["Expr", ...]
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Compose(Node):
    """Sequential composition; an unrolled ``repeat``."""

    stages: tuple["Expr", ...]
    span: Span | None = field(**_SPAN)


Expr = Union[
    UnitLit, Builtin, QubitLit, BitLit, BitConst, Var, DefRef, QubitRef, Tensor, Fold,
    Phase, Translate, Measure, Predicate, Reverse, Flip, Rotate, Prep, Embed,
    Instantiate, Bind, Apply, Repeat, Compose, Std, Pm, Ij, Fourier, BasisLit,
    BasisTensor, BasisFold,
]


# ---------------------------------------------------------- classical bodies

@dataclass(frozen=True)
class CVar(Node):
    name: str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CDim(Node):
    """A dimension expression used as an integer (rotation amounts)."""

    dim: DimExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CBits(Node):
    bits: tuple[int, ...]
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CConst(Node):
    width: DimExpr
    value: DimExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CIndex(Node):
    operand: "ClassicalExpr"
    index: DimExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CSlice(Node):
    operand: "ClassicalExpr"
    lo: DimExpr
    hi: DimExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CNot(Node):
    operand: "ClassicalExpr"
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CBinOp(Node):
    op: str  # & | ^
    left: "ClassicalExpr"
    right: "ClassicalExpr"
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CConcat(Node):
    items: tuple["ClassicalExpr", ...]
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CRotate(Node):
    direction: str  # rotl | rotr
    operand: "ClassicalExpr"
    amount: "ClassicalExpr"
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CReduce(Node):
    op: str  # xor | and | or
    operand: "ClassicalExpr"
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CZeroExtend(Node):
    operand: "ClassicalExpr"
    width: DimExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CEquals(Node):
    operand: "ClassicalExpr"
    value: DimExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class CMulMod(Node):
    operand: "ClassicalExpr"
    factor: DimExpr
    modulus: DimExpr
    span: Span | None = field(**_SPAN)


ClassicalExpr = Union[
    CVar, CDim, CBits, CConst, CIndex, CSlice, CNot, CBinOp, CConcat, CRotate,
    CReduce, CZeroExtend, CEquals, CMulMod,
]


# --------------------------------------------------------------- definitions

@dataclass(frozen=True)
class Param(Node):
    name: str
    type: TypeExpr
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Definition(Node):
    name: str
    kind: str  # qpu | classical
    rev: bool
    dims: tuple[str, ...]
    captures: tuple[Param, ...]
    params: tuple[Param, ...]
    ret: TypeExpr
    body: Node
    span: Span | None = field(**_SPAN)

    @property
    def is_classical(self) -> bool:
        return self.kind == "classical"


@dataclass(frozen=True)
class Program(Node):
    definitions: tuple[Definition, ...]
    entry: str | None = field(default=None, compare=False)
    span: Span | None = field(**_SPAN)

    def get(self, name: str) -> Definition | None:
        for d in self.definitions:
            if d.name == name:
                return d
        return None

    def names(self) -> list[str]:
        return [d.name for d in self.definitions]


# ----------------------------------------------------------------- traversal

def map_children(node: Node, fn: Callable[[Node], Node]) -> Node:
    """Rebuild ``node`` with ``fn`` applied to each direct child node."""
    changes = {}
    for f in dataclasses.fields(node):
        if f.name == "span":
            continue
        value = getattr(node, f.name)
        if isinstance(value, Node):
            new = fn(value)
        elif isinstance(value, tuple) and any(isinstance(v, Node) for v in value):
            new = tuple(fn(v) if isinstance(v, Node) else v for v in value)
        else:
            continue
        if new is not value and new != value:
            changes[f.name] = new
    return dataclasses.replace(node, **changes) if changes else node


def iter_nodes(node: Node):
    """Pre-order walk over ``node`` and all of its descendants."""
    yield node
    for f in dataclasses.fields(node):
        value = getattr(node, f.name)
        if isinstance(value, Node):
            yield from iter_nodes(value)
        elif isinstance(value, tuple):
            for v in value:
                if isinstance(v, Node):
                    yield from iter_nodes(v)


def normalize_tensors(node: Node) -> Node:
    """Flatten nested tensors and absorb units, in expressions, bases and types."""
    node = map_children(node, normalize_tensors)
    if isinstance(node, (Tensor, BasisTensor, TensorT)):
        unit = {Tensor: UnitLit, BasisTensor: None, TensorT: UnitT}[type(node)]
        flat: list[Node] = []
        for item in node.items:
            if type(item) is type(node):
                flat.extend(item.items)
            elif unit is not None and isinstance(item, unit):
                continue
            else:
                flat.append(item)
        if len(flat) == 1:
            return flat[0]
        if not flat and unit is not None:
            return unit(node.span)
        return dataclasses.replace(node, items=tuple(flat))
    return node


def substitute_dims(node: Node, bindings: Mapping[str, int],
                    phases: Sequence[float] | None = None) -> Node:
    """Replace dimension variables by their values.

    Variables bound by an enclosing ``repeat`` are left symbolic inside its
    body; every other variable must be bound. Angles and ``bit[W](V)``
    constants that become closed are evaluated.
    """
    return _subst(node, dict(bindings), frozenset(), phases)


def _subst(node: Node, env: dict[str, int], loop_vars: frozenset[str],
           phases: Sequence[float] | None) -> Node:
    if isinstance(node, (DimConst, DimVar, DimBinOp)):
        missing = dim_free_vars(node) - env.keys() - loop_vars
        if missing:
            raise UnboundDimVar(sorted(missing)[0], node.span)
        return dim_subst(node, env)
    if isinstance(node, (AngleConst, AnglePi, AngleDim, AngleNeg, AngleBinOp, PhaseRef)):
        if angle_closed(node, env, phases is not None):
            if isinstance(node, AnglePi):
                return node
            return AngleConst(angle_eval(node, env, phases), node.span)
        return map_children(node, lambda c: _subst(c, env, loop_vars, phases))
    if isinstance(node, Repeat):
        lo = _subst(node.lo, env, loop_vars, phases)
        hi = _subst(node.hi, env, loop_vars, phases)
        inner = loop_vars | {node.var}
        inner_env = {k: v for k, v in env.items() if k != node.var}
        stages = tuple(_subst(s, inner_env, inner, phases) for s in node.stages)
        return Repeat(node.var, lo, hi, stages, node.span)
    node = map_children(node, lambda c: _subst(c, env, loop_vars, phases))
    if isinstance(node, BitConst) and isinstance(node.width, DimConst) and isinstance(node.value, DimConst):
        return BitLit(int_to_bits(node.value.value, node.width.value), node.span)
    if isinstance(node, CConst) and isinstance(node.width, DimConst) and isinstance(node.value, DimConst):
        return CBits(int_to_bits(node.value.value, node.width.value), node.span)
    return node


def int_to_bits(value: int, width: int) -> tuple[int, ...]:
    if value < 0 or value >= 1 << width:
        raise NegativeDim(f"{value} does not fit in {width} bits")
    return tuple((value >> (width - 1 - k)) & 1 for k in range(width))


def bits_to_int(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


# ------------------------------------------------------------ pretty printer

_LEVEL_PIPE, _LEVEL_PRED, _LEVEL_TRANS, _LEVEL_TENSOR, _LEVEL_PREFIX, _LEVEL_POSTFIX, _LEVEL_ATOM = range(1, 8)


def pretty(node: Node) -> str:
    """Render ``node`` as source text that parses back to an equal tree."""
    if isinstance(node, Program):
        return "\n\n".join(pretty(d) for d in node.definitions) + "\n"
    if isinstance(node, Definition):
        return _pretty_def(node)
    if isinstance(node, (DimConst, DimVar, DimBinOp, DimHole)):
        return _pretty_dim(node)
    if isinstance(node, (AngleConst, AnglePi, AngleDim, AngleNeg, AngleBinOp, PhaseRef)):
        return _pretty_angle(node)
    if isinstance(node, (QubitT, BitT, BasisT, UnitT, TensorT, PowT, FuncT)):
        return _pretty_type(node)
    if isinstance(node, (CVar, CDim, CBits, CConst, CIndex, CSlice, CNot, CBinOp, CConcat,
                         CRotate, CReduce, CZeroExtend, CEquals, CMulMod)):
        return _pretty_classical(node)
    return _pretty_expr(node, 0)


def _pretty_dim(d: Node) -> str:
    if isinstance(d, DimConst):
        return str(d.value)
    if isinstance(d, DimVar):
        return d.name
    if isinstance(d, DimHole):
        return "..."
    return f"({_pretty_dim(d.left)} {d.op} {_pretty_dim(d.right)})"


def _pretty_angle(a: Node) -> str:
    if isinstance(a, AngleConst):
        return repr(float(a.value))
    if isinstance(a, AnglePi):
        return "pi"
    if isinstance(a, AngleDim):
        return _pretty_dim(a.dim)
    if isinstance(a, AngleNeg):
        return f"-{_pretty_angle(a.operand)}"
    if isinstance(a, PhaseRef):
        return f"phases[{_pretty_dim(a.index)}]"
    return f"({_pretty_angle(a.left)} {a.op} {_pretty_angle(a.right)})"


def _pretty_type(t: Node) -> str:
    if isinstance(t, QubitT):
        return "qubit"
    if isinstance(t, BitT):
        return "bit"
    if isinstance(t, BasisT):
        return f"basis[{_pretty_dim(t.dim)}]"
    if isinstance(t, UnitT):
        return "()"
    if isinstance(t, PowT):
        return f"{_pretty_type(t.base)}[{_pretty_dim(t.count)}]"
    if isinstance(t, TensorT):
        return "(" + ", ".join(_pretty_type(i) for i in t.items) + ")"
    if isinstance(t, FuncT):
        if not _shorthand(t):
            arrow = " rev-> " if t.rev else " -> "
            return _pretty_type(t.inp) + arrow + _pretty_type(t.out)
        ins, outs = _func_widths(t)
        if isinstance(t.inp.base, BitT):
            name = "cfunc"
        else:
            name = "rev_qfunc" if t.rev else "qfunc"
        return f"{name}[{_pretty_dim(ins)}, {_pretty_dim(outs)}]"
    raise TypeError(f"not a type: {t!r}")


def _shorthand(t: FuncT) -> bool:
    if not (isinstance(t.inp, PowT) and isinstance(t.out, PowT)):
        return False
    kinds = {type(t.inp.base), type(t.out.base)}
    return kinds == {QubitT} or (kinds == {BitT} and not t.rev)


def _func_widths(t: FuncT) -> tuple[DimExpr, DimExpr]:
    if not (isinstance(t.inp, PowT) and isinstance(t.out, PowT)):
        raise ValueError("only shorthand function types have a surface form")
    return t.inp.count, t.out.count


def _pretty_def(d: Definition) -> str:
    head = "qpu" if d.kind == "qpu" else "classical"
    if d.rev:
        head += " rev"
    head += f" {d.name}"
    if d.dims:
        head += "[" + ", ".join(d.dims) + "]"
    caps = ", ".join(f"{p.name}: {_pretty_type(p.type)}" for p in d.captures)
    params = ", ".join(f"{p.name}: {_pretty_type(p.type)}" for p in d.params)
    explicit = bool(d.captures) or (d.kind == "qpu" and any(not type_has_qubit(p.type) for p in d.params))
    if explicit:
        sig = f"{caps}; {params}" if params else f"{caps};"
    else:
        sig = params
    body = pretty(d.body)
    return f"{head}({sig}) -> {_pretty_type(d.ret)}:\n    {body}"


def _level(e: Node) -> int:
    if isinstance(e, Apply):
        return _LEVEL_PIPE
    if isinstance(e, Predicate):
        return _LEVEL_PRED
    if isinstance(e, Translate):
        return _LEVEL_TRANS
    if isinstance(e, (Tensor, BasisTensor)):
        return _LEVEL_TENSOR if len(e.items) > 1 else _LEVEL_ATOM
    if isinstance(e, (Phase, Reverse)):
        return _LEVEL_PREFIX
    if isinstance(e, (Fold, BasisFold, Measure, Flip, Rotate, Prep, Embed, Instantiate, Bind)):
        return _LEVEL_POSTFIX
    return _LEVEL_ATOM


def _wrap(e: Node, minimum: int) -> str:
    text = _pretty_expr(e, minimum)
    return f"({text})" if _level(e) < minimum else text


def _pretty_expr(e: Node, _ctx: int) -> str:
    if isinstance(e, UnitLit):
        return "()"
    if isinstance(e, Builtin):
        return e.name
    if isinstance(e, QubitLit):
        text = f"'{e.symbols}'"
        if e.fold != DimConst(1):
            text += f"[{_pretty_dim(e.fold)}]"
        return text
    if isinstance(e, BitLit):
        return "0b" + "".join(map(str, e.bits))
    if isinstance(e, BitConst):
        return f"bit[{_pretty_dim(e.width)}]({_pretty_dim(e.value)})"
    if isinstance(e, (Var, DefRef)):
        return e.name
    if isinstance(e, QubitRef):
        return f"q{e.index}"
    if isinstance(e, Std):
        return "std"
    if isinstance(e, Pm):
        return "pm"
    if isinstance(e, Ij):
        return "ij"
    if isinstance(e, Fourier):
        return f"fourier[{_pretty_dim(e.dim)}]"
    if isinstance(e, BasisLit):
        return "{" + ", ".join(_pretty_vector(v) for v in e.vectors) + "}"
    if isinstance(e, (Tensor, BasisTensor)):
        if not e.items:
            return "()"
        if len(e.items) == 1:
            # a singleton tensor has no surface syntax of its own
            return _pretty_expr(e.items[0], _ctx)
        return " + ".join(_wrap(i, _LEVEL_PREFIX) for i in e.items)
    if isinstance(e, (Fold, BasisFold)):
        inner = e.expr if isinstance(e, Fold) else e.basis
        text = _wrap(inner, _LEVEL_POSTFIX)
        if isinstance(inner, QubitLit):
            text = f"({text})"
        return f"{text}[{_pretty_dim(e.count)}]"
    if isinstance(e, Phase):
        return f"phase({_pretty_angle(e.angle)})*{_wrap(e.expr, _LEVEL_PREFIX)}"
    if isinstance(e, Reverse):
        return f"~{_wrap(e.fn, _LEVEL_PREFIX)}"
    if isinstance(e, Translate):
        return f"{_wrap(e.src, _LEVEL_TENSOR)} >> {_wrap(e.dst, _LEVEL_TENSOR)}"
    if isinstance(e, Predicate):
        if e.mirrored:
            return f"{_wrap(e.fn, _LEVEL_PRED)} & {_wrap(e.basis, _LEVEL_TRANS)}"
        return f"{_wrap(e.basis, _LEVEL_PRED)} & {_wrap(e.fn, _LEVEL_TRANS)}"
    if isinstance(e, Apply):
        if isinstance(e.arg, UnitLit):
            return f"{_wrap(e.fn, _LEVEL_POSTFIX)}()"
        return f"{_wrap(e.arg, _LEVEL_PIPE)} | {_wrap(e.fn, _LEVEL_PRED)}"
    if isinstance(e, Measure):
        return f"{_wrap(e.basis, _LEVEL_POSTFIX)}.measure"
    if isinstance(e, Flip):
        return f"{_wrap(e.basis, _LEVEL_POSTFIX)}.flip"
    if isinstance(e, Rotate):
        return f"{_wrap(e.basis, _LEVEL_POSTFIX)}.rotate({_pretty_angle(e.angle)})"
    if isinstance(e, Prep):
        return f"{_wrap(e.operand, _LEVEL_POSTFIX)}.prep"
    if isinstance(e, Embed):
        base = _wrap(e.fn, _LEVEL_POSTFIX)
        if e.kind == "xor":
            return f"{base}.xor_embed"
        if e.kind == "phase":
            return f"{base}.phase"
        return f"{base}.inplace({_pretty_expr(e.inverse, 0)})"
    if isinstance(e, Instantiate):
        return f"{_wrap(e.target, _LEVEL_POSTFIX)}[[" + ", ".join(_pretty_dim(d) for d in e.dims) + "]]"
    if isinstance(e, Bind):
        return f"{_wrap(e.target, _LEVEL_POSTFIX)}(" + ", ".join(_pretty_expr(a, 0) for a in e.args) + ")"
    if isinstance(e, Repeat):
        body = " | ".join(_wrap(s, _LEVEL_PRED) for s in e.stages)
        return f"repeat {e.var} in {_pretty_dim(e.lo)}..{_pretty_dim(e.hi)}: ({body})"
    if isinstance(e, Compose):
        return "(" + " | ".join(_wrap(s, _LEVEL_PRED) for s in e.stages) + ")"
    raise TypeError(f"cannot pretty-print {e!r}")


def _pretty_vector(v: BasisVector) -> str:
    lit = _pretty_expr(v.literal, 0)
    if v.angle == AngleConst(0.0):
        return lit
    return f"phase({_pretty_angle(v.angle)})*{lit}"


def _pretty_classical(c: Node) -> str:
    if isinstance(c, CVar):
        return c.name
    if isinstance(c, CDim):
        return _pretty_dim(c.dim)
    if isinstance(c, CBits):
        return "0b" + "".join(map(str, c.bits))
    if isinstance(c, CConst):
        return f"bit[{_pretty_dim(c.width)}]({_pretty_dim(c.value)})"
    if isinstance(c, CIndex):
        return f"{_pretty_classical_postfix(c.operand)}[{_pretty_dim(c.index)}]"
    if isinstance(c, CSlice):
        return f"{_pretty_classical_postfix(c.operand)}[{_pretty_dim(c.lo)}:{_pretty_dim(c.hi)}]"
    if isinstance(c, CNot):
        return f"~{_pretty_classical_postfix(c.operand)}"
    if isinstance(c, CBinOp):
        return f"({_pretty_classical(c.left)} {c.op} {_pretty_classical(c.right)})"
    if isinstance(c, CEquals):
        return f"({_pretty_classical(c.operand)} == {_pretty_dim(c.value)})"
    if isinstance(c, CConcat):
        return "concat(" + ", ".join(_pretty_classical(i) for i in c.items) + ")"
    if isinstance(c, CRotate):
        return f"{_pretty_classical_postfix(c.operand)}.{c.direction}({_pretty_classical(c.amount)})"
    if isinstance(c, CReduce):
        return f"{_pretty_classical_postfix(c.operand)}.{c.op}_reduce()"
    if isinstance(c, CZeroExtend):
        return f"{_pretty_classical_postfix(c.operand)}.zero_extend({_pretty_dim(c.width)})"
    if isinstance(c, CMulMod):
        return (f"{_pretty_classical_postfix(c.operand)}.mul_const_mod("
                f"{_pretty_dim(c.factor)}, {_pretty_dim(c.modulus)})")
    raise TypeError(f"cannot pretty-print {c!r}")


def _pretty_classical_postfix(c: Node) -> str:
    text = _pretty_classical(c)
    if isinstance(c, (CNot, CDim)) and not isinstance(getattr(c, "dim", None), (DimConst, DimVar)):
        return f"({text})"
    return text
