"""Specialize a program for concrete dimensions and capture values.

Every definition reachable from the entry point is copied once per distinct
(dimension assignment, capture values) pair. The copies are closed: they
have no dimension variables, no captures, and ``repeat`` is unrolled into
``Compose``. References to other definitions become ``Var`` nodes naming
the specialized copy.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..errors import Span, TypeCheckError, UnboundDimVar
from ..syntax import (
    BasisT, BitConst, BitLit, BitT, Bind, CBits, CVar, Compose, Definition, DimBinOp,
    DimConst, DimHole, DimVar, FuncT, Instantiate, Node, Param, PhaseRef, PowT, Program,
    QubitT, Repeat, TensorT, UnitT, Var, dim_eval, dim_free_vars, int_to_bits, iter_nodes,
    map_children, substitute_dims,
)


@dataclass(frozen=True)
class BitsValue:
    bits: tuple[int, ...]

    def __str__(self) -> str:
        return "0b" + "".join(map(str, self.bits))


@dataclass(frozen=True)
class IntValue:
    """An integer capture from the command line; its width comes from the pattern."""

    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class FuncRef:
    """A reference to a definition with some dimensions and captures fixed."""

    name: str
    dims: tuple[tuple[str, int], ...] = ()
    holes: tuple[str, ...] = ()
    captures: tuple["CaptureValue", ...] | None = None

    def dim_map(self) -> dict[str, int]:
        return dict(self.dims)

    def __str__(self) -> str:
        text = self.name
        if self.dims or self.holes:
            shown = [f"{k}={v}" for k, v in self.dims] + [f"{h}=..." for h in self.holes]
            text += "[" + ",".join(shown) + "]"
        if self.captures:
            text += "(" + ",".join(str(c) for c in self.captures) + ")"
        return text


CaptureValue = BitsValue | IntValue | FuncRef


@dataclass
class _Sig:
    """Signature of a definition under a partial dimension assignment."""

    type: FuncT
    env: dict[str, int]
    bindable: set[str]


def monomorphize(program: Program, entry: str, bindings: Mapping[str, int] | None = None,
                 captures: Mapping[str, CaptureValue] | None = None,
                 phases: Sequence[float] | None = None) -> Program:
    """Specialize ``program`` starting from ``entry``.

    Returns a program of closed definitions whose ``entry`` names the
    specialized entry point.
    """
    mono = _Monomorphizer(program, phases)
    name = mono.entry(entry, dict(bindings or {}), dict(captures or {}))
    return Program(tuple(mono.done.values()), entry=name)


class _Monomorphizer:
    def __init__(self, program: Program, phases: Sequence[float] | None):
        self.program = program
        self.phases = None if phases is None else list(phases)
        self.done: dict[str, Definition] = {}
        self.names: dict[tuple, str] = {}

    # --------------------------------------------------------- lookups
    def definition(self, name: str, span: Span | None = None) -> Definition:
        d = self.program.get(name)
        if d is None:
            raise TypeCheckError("UnknownName", f"no definition named {name!r}", span)
        return d

    def entry(self, name: str, bindings: dict[str, int], captures: dict[str, CaptureValue]) -> str:
        d = self.definition(name)
        unknown = sorted(set(bindings) - set(d.dims))
        if unknown:
            raise TypeCheckError("UnknownName", f"{name} has no dimension variable {unknown[0]!r}", d.span)
        extra = sorted(set(captures) - {c.name for c in d.captures})
        if extra:
            raise TypeCheckError("UnknownName", f"{name} has no capture {extra[0]!r}", d.span)
        missing = [c.name for c in d.captures if c.name not in captures]
        if missing:
            raise TypeCheckError("ArityMismatch", f"capture {missing[0]!r} of {name} is not bound", d.span)
        ordered = tuple(captures[c.name] for c in d.captures) if d.captures else None
        ref = FuncRef(name, tuple((k, bindings[k]) for k in d.dims if k in bindings), (), ordered)
        return self.specialize(ref, d.span)

    # ---------------------------------------------------- signatures
    def signature(self, ref, span: Span | None) -> _Sig:
        if isinstance(ref, _Specialized):
            d = self.done.get(ref.name)
            if d is None:
                raise TypeCheckError("ArityMismatch", f"{ref.name} refers to itself", span)
            inp = TensorT(tuple(p.type for p in d.params))
            return _Sig(FuncT(inp, d.ret, d.rev and not d.is_classical), {}, set())
        d = self.definition(ref.name, span)
        env = ref.dim_map()
        if ref.captures:
            self.infer(d, ref.captures, env, set(d.dims) - set(env) - set(ref.holes), span)
        inp = TensorT(tuple(p.type for p in d.params))
        t = FuncT(inp, d.ret, d.rev and not d.is_classical)
        bindable = set(d.dims) - set(env) - set(ref.holes)
        return _Sig(t, env, bindable)

    def infer(self, d: Definition, values: Sequence[CaptureValue], env: dict[str, int],
              bindable: set[str], span: Span | None) -> list[CaptureValue]:
        """Bind dimensions of ``d`` from its capture patterns; returns refined values."""
        values = list(values)
        for _ in range(len(d.dims) + len(values) + 2):
            before = (dict(env), list(values))
            for i, (param, value) in enumerate(zip(d.captures, values)):
                values[i] = self.unify_capture(param, value, env, bindable, span)
            if before == (env, values):
                break
        return values

    def unify_capture(self, param: Param, value: CaptureValue, env: dict[str, int],
                      bindable: set[str], span: Span | None) -> CaptureValue:
        pattern = param.type
        if isinstance(value, (BitsValue, IntValue)):
            if isinstance(pattern, FuncT):
                raise TypeCheckError("ArityMismatch", f"capture {param.name!r} expects a function", span)
            segs = _segments(pattern)
            if len(segs) != 1 or segs[0][0] != "bit":
                raise TypeCheckError("ArityMismatch", f"capture {param.name!r} is not a bit string", span)
            if isinstance(value, IntValue):
                try:
                    width = dim_eval(segs[0][1], env)
                except UnboundDimVar:
                    return value
                return BitsValue(int_to_bits(value.value, width))
            _unify_count(segs[0][1], env, bindable, DimConst(len(value.bits)), {}, set(), span)
            return value
        if not isinstance(pattern, FuncT):
            raise TypeCheckError("ArityMismatch", f"capture {param.name!r} expects bits, got a function", span)
        sig = self.signature(value, span)
        if pattern.rev and not sig.type.rev:
            raise TypeCheckError("NotReversible", f"capture {param.name!r} must be reversible", span)
        for p_side, v_side in ((pattern.inp, sig.type.inp), (pattern.out, sig.type.out)):
            _unify_types(p_side, env, bindable, v_side, sig.env, sig.bindable, span)
        if isinstance(value, _Specialized):
            return value
        new_dims = {k: v for k, v in sig.env.items() if k not in value.dim_map()}
        if new_dims:
            d = self.definition(value.name, span)
            merged = {**value.dim_map(), **new_dims}
            value = dataclasses.replace(
                value, dims=tuple((k, merged[k]) for k in d.dims if k in merged))
        return value

    # ------------------------------------------------------ specialize
    def specialize(self, ref: FuncRef, span: Span | None) -> str:
        d = self.definition(ref.name, span)
        env = ref.dim_map()
        captures = list(ref.captures or ())
        if len(captures) != len(d.captures):
            if d.captures and not captures:
                raise TypeCheckError("ArityMismatch", f"{d.name} needs captures "
                                     + ", ".join(c.name for c in d.captures), span)
            raise TypeCheckError("ArityMismatch",
                                 f"{d.name} takes {len(d.captures)} captures, got {len(captures)}", span)
        captures = self.infer(d, captures, env, set(d.dims) - set(env), span)
        for k in d.dims:
            if k not in env:
                raise UnboundDimVar(k, span)
        closed_caps = []
        for param, value in zip(d.captures, captures):
            closed_caps.append(self.close_capture(param, value, env, span))
        key = (d.name, tuple(env[k] for k in d.dims), tuple(closed_caps))
        if key in self.names:
            return self.names[key]
        name = d.name
        if d.dims:
            name += "[" + ",".join(str(env[k]) for k in d.dims) + "]"
        if closed_caps:
            name += "{" + ",".join(f"{p.name}={v}" for p, v in zip(d.captures, closed_caps)) + "}"
        self.names[key] = name
        self.done[name] = None  # reserve the slot so recursion terminates
        self.done[name] = self.build(d, name, env, dict(zip((c.name for c in d.captures), closed_caps)))
        return name

    def close_capture(self, param: Param, value: CaptureValue, env: dict[str, int],
                      span: Span | None):
        """Closed capture value: bits, or the specialized name of a function."""
        pattern = substitute_dims(param.type, env)
        if isinstance(value, IntValue):
            raise UnboundDimVar(param.name, span)
        if isinstance(value, BitsValue):
            width = _segments(pattern)[0][1]
            if dim_eval(width, {}) != len(value.bits):
                raise TypeCheckError("DimMismatch",
                                     f"capture {param.name!r} expects {dim_eval(width, {})} bits, "
                                     f"got {len(value.bits)}", span)
            return value
        if isinstance(value, _Specialized):
            name = value.name
        elif value.holes:
            return value
        else:
            name = self.specialize(value, span)
        target = self.done.get(name)
        if target is not None:
            self.check_capture_type(param, pattern, target, span)
        return _Specialized(name)

    def check_capture_type(self, param: Param, pattern: FuncT, target: Definition,
                           span: Span | None) -> None:
        actual_in = _flat(TensorT(tuple(p.type for p in target.params)))
        actual_out = _flat(target.ret)
        if _flat(pattern.inp) != actual_in or _flat(pattern.out) != actual_out:
            raise TypeCheckError("DimMismatch",
                                 f"capture {param.name!r} has the wrong signature for {target.name}", span)
        if pattern.rev and not (target.rev and not target.is_classical):
            raise TypeCheckError("NotReversible", f"capture {param.name!r} must be reversible", span)

    # ------------------------------------------------------------ bodies
    def build(self, d: Definition, name: str, env: dict[str, int],
              caps: dict[str, object]) -> Definition:
        params = tuple(Param(p.name, substitute_dims(p.type, env), p.span) for p in d.params)
        ret = substitute_dims(d.ret, env)
        if d.is_classical:
            body = substitute_dims(d.body, env)
            bits = {k: v for k, v in caps.items() if isinstance(v, BitsValue)}
            if len(bits) != len(caps):
                raise TypeCheckError("ArityMismatch", "classical functions capture only bits", d.span)
            body = _replace_cvars(body, bits)
        else:
            body = substitute_dims(d.body, env, self.phases)
            locals_ = {p.name for p in d.params}
            body = _BodySpecializer(self, env, caps, locals_).expr(body)
        _reject_open_phases(body, name, d.span)
        return Definition(name, d.kind, d.rev, (), (), params, ret, body, d.span)


@dataclass(frozen=True)
class _Specialized:
    """A capture that has already been specialized to a closed definition."""

    name: str

    def __str__(self) -> str:
        return self.name


class _BodySpecializer:
    def __init__(self, mono: _Monomorphizer, env: dict[str, int], caps: dict[str, object],
                 locals_: set[str]):
        self.mono = mono
        self.env = env
        self.caps = caps
        self.locals = locals_

    def expr(self, e: Node) -> Node:
        if isinstance(e, Repeat):
            return self.repeat(e)
        if isinstance(e, (Var, Instantiate, Bind)):
            return self.reference(e)
        if isinstance(e, BitConst):
            return substitute_dims(e, {})
        return map_children(e, self.expr)

    def repeat(self, e: Repeat) -> Compose:
        lo, hi = dim_eval(e.lo, {}), dim_eval(e.hi, {})
        stages = []
        for i in range(lo, hi):
            for stage in e.stages:
                inst = substitute_dims(stage, {e.var: i}, self.mono.phases)
                out = self.expr(inst)
                stages.extend(out.stages if isinstance(out, Compose) else [out])
        return Compose(tuple(stages), e.span)

    def reference(self, e: Node) -> Node:
        if isinstance(e, Var) and e.name in self.locals:
            return e
        value = self.value(e)
        if value is None:
            return map_children(e, self.expr)
        if isinstance(value, BitsValue):
            return BitLit(value.bits, e.span)
        if isinstance(value, IntValue):
            raise UnboundDimVar("width of integer capture", e.span)
        if isinstance(value, _Specialized):
            return Var(value.name, e.span)
        return Var(self.mono.specialize(value, e.span), e.span)

    def value(self, e: Node):
        """Compile-time value of a reference expression, or None."""
        if isinstance(e, Var):
            if e.name in self.locals:
                return None
            if e.name in self.caps:
                return self.caps[e.name]
            self.mono.definition(e.name, e.span)
            return FuncRef(e.name)
        if isinstance(e, BitLit):
            return BitsValue(e.bits)
        if isinstance(e, BitConst):
            lit = substitute_dims(e, {})
            return BitsValue(lit.bits)
        if isinstance(e, Instantiate):
            base = self.value(e.target)
            if isinstance(base, _Specialized):
                raise TypeCheckError("ArityMismatch", f"{base.name} is already fully instantiated", e.span)
            if not isinstance(base, FuncRef):
                raise TypeCheckError("ArityMismatch", "only definitions can be instantiated", e.span)
            return self.instantiate(base, e)
        if isinstance(e, Bind):
            base = self.value(e.target)
            if not isinstance(base, FuncRef):
                raise TypeCheckError("ArityMismatch", "only definitions can take captures", e.span)
            if base.captures is not None:
                raise TypeCheckError("ArityMismatch", f"captures of {base.name} are already bound", e.span)
            d = self.mono.definition(base.name, e.span)
            if len(e.args) != len(d.captures):
                raise TypeCheckError("ArityMismatch",
                                     f"{d.name} takes {len(d.captures)} captures, got {len(e.args)}", e.span)
            args = []
            for a in e.args:
                v = self.value(a)
                if v is None:
                    raise TypeCheckError("ArityMismatch", "captures must be bits or functions", a.span)
                args.append(v)
            return dataclasses.replace(base, captures=tuple(args))
        return None

    def instantiate(self, base: FuncRef, e: Instantiate) -> FuncRef:
        d = self.mono.definition(base.name, e.span)
        values = []
        for dim in e.dims:
            values.append(None if isinstance(dim, DimHole) else dim_eval(dim, {}))
        if base.holes:
            names = base.holes
        elif not base.dims:
            names = d.dims
        else:
            raise TypeCheckError("ArityMismatch", f"{base.name} has no open dimensions", e.span)
        if len(values) != len(names):
            raise TypeCheckError("ArityMismatch",
                                 f"{base.name} expects {len(names)} dimensions, got {len(values)}", e.span)
        dims = base.dim_map()
        holes = []
        for n, v in zip(names, values):
            if v is None:
                holes.append(n)
            else:
                dims[n] = v
        return dataclasses.replace(base, dims=tuple((k, dims[k]) for k in d.dims if k in dims),
                                   holes=tuple(holes))


# ------------------------------------------------------------ helpers

def dim_free_vars_type(t: Node) -> set[str]:
    out: set[str] = set()
    for n in iter_nodes(t):
        if isinstance(n, DimVar):
            out.add(n.name)
    return out


def _segments(t: Node) -> list[tuple[object, object]]:
    """Run-length form of a type: [(kind, count DimExpr)], zero-width runs dropped."""
    out: list[tuple[object, object]] = []

    def walk(x, mult):
        if isinstance(x, QubitT):
            out.append(("qubit", mult))
        elif isinstance(x, BitT):
            out.append(("bit", mult))
        elif isinstance(x, BasisT):
            out.append((("basis", x.dim), mult))
        elif isinstance(x, UnitT):
            pass
        elif isinstance(x, TensorT):
            for i in x.items:
                walk(i, mult)
        elif isinstance(x, PowT):
            walk(x.base, x.count if mult == DimConst(1) else DimBinOp("*", mult, x.count))
        elif isinstance(x, FuncT):
            out.append((("func", x), mult))
        else:
            raise TypeError(f"not a type: {x!r}")

    walk(t, DimConst(1))
    return [(k, c) for k, c in out if c != DimConst(0)]


def _flat(t: Node) -> tuple:
    """Closed type as a flat tuple of atom kinds."""
    atoms = []
    for kind, count in _segments(t):
        atoms.extend([kind if isinstance(kind, str) else repr(kind)] * dim_eval(count, {}))
    return tuple(atoms)


def _try_eval(d, env) -> int | None:
    if dim_free_vars(d) - env.keys():
        return None
    return dim_eval(d, env)


def _solve(d, env: dict[str, int], bindable: set[str], target: int) -> bool:
    """Bind the single unknown of ``d`` so it evaluates to ``target``."""
    unknown = dim_free_vars(d) - env.keys()
    if len(unknown) != 1:
        return False
    (x,) = unknown
    if x not in bindable:
        return False
    if isinstance(d, DimVar):
        env[x] = target
        return True
    for guess in range(0, 2 * target + 65):
        try:
            if dim_eval(d, {**env, x: guess}) == target:
                env[x] = guess
                return True
        except TypeCheckError:
            continue
    return False


def _unify_count(p, p_env, p_bind, v, v_env, v_bind, span) -> None:
    pv, vv = _try_eval(p, p_env), _try_eval(v, v_env)
    if pv is not None and vv is not None:
        if pv != vv:
            raise TypeCheckError("DimMismatch", f"dimension {pv} does not match {vv}", span)
    elif pv is None and vv is not None:
        _solve(p, p_env, p_bind, vv)
    elif vv is None and pv is not None:
        _solve(v, v_env, v_bind, pv)


def _unify_types(p, p_env, p_bind, v, v_env, v_bind, span) -> None:
    ps, vs = _segments(p), _segments(v)
    if len(ps) == len(vs) and all(_kind_eq(a[0], b[0]) for a, b in zip(ps, vs)):
        for (pk, pc), (vk, vc) in zip(ps, vs):
            _unify_count(pc, p_env, p_bind, vc, v_env, v_bind, span)
        return
    # shapes differ syntactically; compare totals when both are closed
    p_tot = [(k, _try_eval(c, p_env)) for k, c in ps]
    v_tot = [(k, _try_eval(c, v_env)) for k, c in vs]
    if all(c is not None for _, c in p_tot + v_tot):
        if _expand(p_tot) != _expand(v_tot):
            raise TypeCheckError("DimMismatch", "capture signature does not match its pattern", span)


def _kind_eq(a, b) -> bool:
    if isinstance(a, str) or isinstance(b, str):
        return a == b
    return a[0] == b[0]


def _expand(segs) -> list:
    out = []
    for k, c in segs:
        out.extend([k if isinstance(k, str) else k[0]] * c)
    return out


def _replace_cvars(body: Node, bits: dict[str, BitsValue]) -> Node:
    def go(n):
        if isinstance(n, CVar) and n.name in bits:
            return CBits(bits[n.name].bits, n.span)
        return map_children(n, go)
    return go(body)


def _reject_open_phases(body: Node, name: str, span: Span | None) -> None:
    for n in iter_nodes(body):
        if isinstance(n, PhaseRef):
            raise UnboundDimVar("phases", n.span or span)
