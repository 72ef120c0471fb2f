"""Recursive-descent parser for ``.qw`` programs.

Operator precedence, tightest first: postfix, prefix (``~``, unary ``-``,
``phase(t)*``), tensor ``+``, translation ``>>``, predication ``&`` and
finally the pipe ``|``.
"""

from __future__ import annotations

from pathlib import Path

from .errors import IoError, ParseError, Span
from .lexer import Token, lex
from .syntax import (
    AngleBinOp, AngleConst, AngleDim, AngleNeg, AnglePi, Apply, BASIS_NODES, BasisFold,
    BasisLit, BasisT, BasisTensor, BasisVector, Bind, BitConst, BitLit, BitT, Builtin,
    CBinOp, CBits, CConcat, CConst, CDim, CEquals, CIndex, CMulMod, CNot, CReduce,
    CRotate, CSlice, CVar, CZeroExtend, Definition, DimBinOp, DimConst, DimHole, DimVar,
    Embed, Flip, Fold, Fourier, FuncT, Ij, Instantiate, Measure, Param, Phase, PhaseRef,
    Pm, PowT, Predicate, Prep, Program, QubitLit, QubitT, Repeat, Reverse, Rotate, Std,
    Tensor, TensorT, Translate, UnitLit, UnitT, Var, type_has_qubit,
)

_METHODS = frozenset({"measure", "flip", "rotate", "prep", "xor_embed", "phase", "inplace"})


def parse(tokens: list[Token]) -> Program:
    return _Parser(tokens).program()


def parse_source(source: str) -> Program:
    return parse(lex(source))


def parse_file(path: str | Path) -> Program:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return parse_source(text)


def parse_expression(source: str, names: frozenset[str] = frozenset()):
    """Parse a single quantum expression (used by the CLI and tests)."""
    p = _Parser(lex(source))
    e = p.pipe()
    p.expect_eof()
    return e


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        last = tokens[-1].span if tokens else Span(1, 1)
        self.eof = Token("eof", "", Span(last.line, last.column + 1))

    # ------------------------------------------------------------- helpers
    def peek(self, offset: int = 0) -> Token:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else self.eof

    def at(self, kind: str, lexeme: str | None = None, offset: int = 0) -> bool:
        return self.peek(offset).is_(kind, lexeme)

    def at_op(self, lexeme: str, offset: int = 0) -> bool:
        return self.at("op", lexeme, offset)

    def advance(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def error(self, message: str, expected: set[str] | frozenset[str] = frozenset()) -> ParseError:
        tok = self.peek()
        found = tok.lexeme or "end of input"
        return ParseError(f"{message}, found {found!r}", tok.span, frozenset(expected))

    def expect(self, kind: str, lexeme: str | None = None) -> Token:
        if not self.at(kind, lexeme):
            raise self.error("unexpected token", {lexeme or kind})
        return self.advance()

    def expect_op(self, lexeme: str) -> Token:
        return self.expect("op", lexeme)

    def accept_op(self, lexeme: str) -> bool:
        if self.at_op(lexeme):
            self.pos += 1
            return True
        return False

    def expect_eof(self) -> None:
        if self.pos < len(self.tokens):
            raise self.error("trailing input", {"end of input"})

    def ident(self) -> Token:
        return self.expect("ident")

    # ---------------------------------------------------------- definitions
    def program(self) -> Program:
        defs = []
        while self.pos < len(self.tokens):
            defs.append(self.definition())
        return Program(tuple(defs))

    def definition(self) -> Definition:
        if not (self.at("kw", "qpu") or self.at("kw", "classical")):
            raise self.error("expected a definition", {"qpu", "classical"})
        start = self.advance()
        rev = False
        if self.at("kw", "rev"):
            self.advance()
            rev = True
        name = self.ident().lexeme
        dims: list[str] = []
        if self.accept_op("["):
            dims.append(self.ident().lexeme)
            while self.accept_op(","):
                dims.append(self.ident().lexeme)
            self.expect_op("]")
        if len(set(dims)) != len(dims):
            raise ParseError(f"repeated dimension variable in {name}", start.span)
        self.expect_op("(")
        before, after, split = self.param_list()
        self.expect_op(")")
        self.expect_op("->")
        ret = self.type_expr()
        self.expect_op(":")
        if split:
            captures, params = before, after
        elif start.lexeme == "qpu":
            captures = [p for p in before if not type_has_qubit(p.type)]
            params = [p for p in before if type_has_qubit(p.type)]
        else:
            captures, params = [], before
        names = [p.name for p in captures + params]
        if len(set(names)) != len(names):
            raise ParseError(f"repeated parameter name in {name}", start.span)
        if start.lexeme == "classical":
            body = _ClassicalParser(self, frozenset(names)).expr()
        else:
            body = self.pipe()
        return Definition(name, start.lexeme, rev, tuple(dims), tuple(captures),
                          tuple(params), ret, body, start.span)

    def param_list(self) -> tuple[list[Param], list[Param], bool]:
        groups: list[list[Param]] = [[]]
        while not self.at_op(")"):
            if self.accept_op(";"):
                if len(groups) == 2:
                    raise self.error("at most one ';' in a parameter list")
                groups.append([])
                continue
            if groups[-1]:
                self.expect_op(",")
            tok = self.ident()
            self.expect_op(":")
            groups[-1].append(Param(tok.lexeme, self.type_expr(), tok.span))
        if len(groups) == 2:
            return groups[0], groups[1], True
        return groups[0], [], False

    # ---------------------------------------------------------------- types
    def type_expr(self):
        tok = self.peek()
        if self.accept_op("("):
            if self.accept_op(")"):
                return UnitT(tok.span)
            items = [self.type_expr()]
            while self.accept_op(","):
                items.append(self.type_expr())
            self.expect_op(")")
            return items[0] if len(items) == 1 else TensorT(tuple(items), tok.span)
        if tok.kind == "kw" and tok.lexeme in ("qubit", "bit", "basis"):
            self.advance()
            count = None
            if self.accept_op("["):
                count = self.dim()
                self.expect_op("]")
            if tok.lexeme == "basis":
                return BasisT(count if count is not None else DimConst(1), tok.span)
            base = QubitT(tok.span) if tok.lexeme == "qubit" else BitT(tok.span)
            return base if count is None else PowT(base, count, tok.span)
        if tok.kind == "kw" and tok.lexeme in ("qfunc", "rev_qfunc", "cfunc"):
            self.advance()
            ins = outs = DimConst(1)
            if self.accept_op("["):
                ins = outs = self.dim()
                if self.accept_op(","):
                    outs = self.dim()
                self.expect_op("]")
            atom = BitT if tok.lexeme == "cfunc" else QubitT
            return FuncT(PowT(atom(tok.span), ins, tok.span), PowT(atom(tok.span), outs, tok.span),
                         tok.lexeme == "rev_qfunc", tok.span)
        raise self.error("expected a type", {"qubit", "bit", "basis", "qfunc", "rev_qfunc", "cfunc", "("})

    # ----------------------------------------------------------- dimensions
    def dim(self):
        left = self.dim_product()
        while self.at_op("+") or self.at_op("-"):
            tok = self.advance()
            left = DimBinOp(tok.lexeme, left, self.dim_product(), tok.span)
        return left

    def dim_product(self):
        left = self.dim_power()
        while self.at_op("*") or self.at_op("//") or self.at_op("%"):
            tok = self.advance()
            left = DimBinOp(tok.lexeme, left, self.dim_power(), tok.span)
        return left

    def dim_power(self):
        base = self.dim_atom()
        if self.at_op("**"):
            tok = self.advance()
            return DimBinOp("**", base, self.dim_power(), tok.span)
        return base

    def dim_atom(self):
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return DimConst(int(tok.lexeme), tok.span)
        if tok.kind == "ident":
            self.advance()
            return DimVar(tok.lexeme, tok.span)
        if self.accept_op("("):
            d = self.dim()
            self.expect_op(")")
            return d
        raise self.error("expected a dimension expression", {"integer", "identifier", "("})

    # --------------------------------------------------------------- angles
    def angle(self):
        left = self.angle_product()
        while self.at_op("+") or self.at_op("-"):
            tok = self.advance()
            left = AngleBinOp(tok.lexeme, left, self.angle_product(), tok.span)
        return left

    def angle_product(self):
        left = self.angle_unary()
        while self.at_op("*") or self.at_op("/"):
            tok = self.advance()
            left = AngleBinOp(tok.lexeme, left, self.angle_unary(), tok.span)
        return left

    def angle_unary(self):
        if self.at_op("-"):
            tok = self.advance()
            return AngleNeg(self.angle_unary(), tok.span)
        return self.angle_power()

    def angle_power(self):
        base = self.angle_atom()
        if self.at_op("**"):
            tok = self.advance()
            return AngleBinOp("**", base, self.angle_unary(), tok.span)
        return base

    def angle_atom(self):
        tok = self.peek()
        if tok.kind in ("int", "float"):
            self.advance()
            return AngleConst(float(tok.lexeme), tok.span)
        if tok.is_("kw", "pi"):
            self.advance()
            return AnglePi(tok.span)
        if tok.is_("kw", "phases"):
            self.advance()
            self.expect_op("[")
            index = self.dim()
            self.expect_op("]")
            return PhaseRef(index, tok.span)
        if tok.kind == "ident":
            self.advance()
            return AngleDim(DimVar(tok.lexeme, tok.span), tok.span)
        if self.accept_op("("):
            a = self.angle()
            self.expect_op(")")
            return a
        raise self.error("expected an angle", {"number", "pi", "phases", "identifier", "("})

    # ---------------------------------------------------------- expressions
    def pipe(self):
        left = self.pred()
        while self.at_op("|"):
            tok = self.advance()
            left = Apply(self.pred(), left, tok.span)
        return left

    def pred(self):
        left = self.trans()
        while self.at_op("&"):
            tok = self.advance()
            right = self.trans()
            left = self._predicate(left, right, tok)
        return left

    def _predicate(self, left, right, tok: Token):
        if _basis_like(left):
            return Predicate(self.to_basis(left, tok.span), right, False, tok.span)
        if _basis_like(right):
            return Predicate(self.to_basis(right, tok.span), left, True, tok.span)
        raise ParseError("one operand of '&' must be a basis", tok.span, frozenset({"basis"}))

    def trans(self):
        left = self.tensor()
        if self.at_op(">>"):
            tok = self.advance()
            right = self.tensor()
            if self.at_op(">>"):
                raise self.error("'>>' is non-associative; add parentheses")
            return Translate(self.to_basis(left, tok.span), self.to_basis(right, tok.span), tok.span)
        return left

    def tensor(self):
        first = self.prefix()
        if not self.at_op("+"):
            return first
        items = [first]
        span = self.peek().span
        while self.accept_op("+"):
            items.append(self.prefix())
        return Tensor(tuple(items), span)

    def prefix(self):
        tok = self.peek()
        if self.accept_op("~"):
            return Reverse(self.prefix(), tok.span)
        if self.accept_op("-"):
            return Phase(AnglePi(tok.span), self.prefix(), tok.span)
        if tok.is_("kw", "phase"):
            self.advance()
            self.expect_op("(")
            theta = self.angle()
            self.expect_op(")")
            self.expect_op("*")
            return Phase(theta, self.prefix(), tok.span)
        return self.postfix()

    def postfix(self):
        e, grouped = self.primary()
        while True:
            tok = self.peek()
            if self.at_op("[") and self.at_op("[", 1):
                self.pos += 2
                dims = [self.dim_or_hole()]
                while self.accept_op(","):
                    dims.append(self.dim_or_hole())
                self.expect_op("]")
                self.expect_op("]")
                e = Instantiate(e, tuple(dims), tok.span)
            elif self.accept_op("["):
                count = self.dim()
                self.expect_op("]")
                if isinstance(e, QubitLit) and not grouped:
                    e = QubitLit(e.symbols, _mul(e.fold, count), e.span)
                else:
                    e = Fold(e, count, tok.span)
            elif self.accept_op("."):
                e = self.method(e, tok)
            elif self.accept_op("("):
                args = []
                while not self.at_op(")"):
                    if args:
                        self.expect_op(",")
                    args.append(self.pipe())
                self.expect_op(")")
                e = Bind(e, tuple(args), tok.span) if args else Apply(e, UnitLit(tok.span), tok.span)
            else:
                return e
            grouped = False

    def dim_or_hole(self):
        tok = self.peek()
        if self.accept_op("..."):
            return DimHole(tok.span)
        return self.dim()

    def method(self, e, dot: Token):
        tok = self.peek()
        if tok.kind not in ("kw", "ident") or tok.lexeme not in _METHODS:
            raise self.error("unknown method", _METHODS)
        self.advance()
        name = tok.lexeme
        if name == "measure":
            return Measure(self.to_basis(e, tok.span), tok.span)
        if name == "flip":
            return Flip(self.to_basis(e, tok.span), tok.span)
        if name == "rotate":
            self.expect_op("(")
            theta = self.angle()
            self.expect_op(")")
            return Rotate(self.to_basis(e, tok.span), theta, tok.span)
        if name == "prep":
            return Prep(e, tok.span)
        if name == "xor_embed":
            return Embed("xor", e, None, tok.span)
        if name == "phase":
            return Embed("phase", e, None, tok.span)
        self.expect_op("(")
        inverse = self.pipe()
        self.expect_op(")")
        return Embed("inplace", e, inverse, tok.span)

    def primary(self):
        tok = self.peek()
        if tok.kind == "qstr":
            self.advance()
            return QubitLit(tok.lexeme, DimConst(1), tok.span), False
        if tok.kind == "bits":
            self.advance()
            return BitLit(tuple(int(c) for c in tok.lexeme[2:]), tok.span), False
        if tok.kind == "ident":
            self.advance()
            return Var(tok.lexeme, tok.span), False
        if tok.kind == "kw":
            word = tok.lexeme
            if word in ("std", "pm", "ij"):
                self.advance()
                return {"std": Std, "pm": Pm, "ij": Ij}[word](tok.span), False
            if word == "fourier":
                self.advance()
                self.expect_op("[")
                n = self.dim()
                self.expect_op("]")
                return Fourier(n, tok.span), False
            if word in ("id", "discard", "discardz"):
                self.advance()
                return Builtin(word, tok.span), False
            if word == "bit":
                self.advance()
                self.expect_op("[")
                width = self.dim()
                self.expect_op("]")
                self.expect_op("(")
                value = self.dim()
                self.expect_op(")")
                return BitConst(width, value, tok.span), False
            if word == "repeat":
                return self.repeat(), False
        if self.accept_op("{"):
            vectors = [self.basis_vector()]
            while self.accept_op(","):
                vectors.append(self.basis_vector())
            self.expect_op("}")
            return BasisLit(tuple(vectors), tok.span), False
        if self.accept_op("("):
            if self.accept_op(")"):
                return UnitLit(tok.span), False
            e = self.pipe()
            self.expect_op(")")
            return e, True
        raise self.error("expected an expression",
                         {"qubit literal", "identifier", "std", "pm", "ij", "fourier", "{", "(", "repeat"})

    def repeat(self):
        tok = self.expect("kw", "repeat")
        var = self.ident().lexeme
        self.expect("kw", "in")
        lo = self.dim()
        self.expect_op("..")
        hi = self.dim()
        self.expect_op(":")
        self.expect_op("(")
        stages = [self.pred()]
        while self.accept_op("|"):
            stages.append(self.pred())
        self.expect_op(")")
        return Repeat(var, lo, hi, tuple(stages), tok.span)

    def basis_vector(self) -> BasisVector:
        tok = self.peek()
        e = self.prefix()
        vec = _as_vector(e)
        if vec is None:
            raise ParseError("basis vectors must be (phased) qubit literals", tok.span,
                             frozenset({"qubit literal", "phase"}))
        return BasisVector(vec[0], vec[1], tok.span)

    def to_basis(self, e, span: Span):
        b = _to_basis(e)
        if b is None:
            raise ParseError("expected a basis here", getattr(e, "span", None) or span, frozenset({"basis"}))
        return b


def _mul(a, b):
    if a == DimConst(1):
        return b
    return DimBinOp("*", a, b, getattr(b, "span", None))


def _as_vector(e):
    if isinstance(e, QubitLit):
        return AngleConst(0.0, e.span), e
    if isinstance(e, Phase):
        inner = _as_vector(e.expr)
        if inner is None:
            return None
        theta, lit = inner
        if theta == AngleConst(0.0):
            return e.angle, lit
        return AngleBinOp("+", e.angle, theta, e.span), lit
    return None


def _basis_like(e) -> bool:
    if isinstance(e, BASIS_NODES) or isinstance(e, QubitLit):
        return True
    if isinstance(e, Phase):
        return _as_vector(e) is not None
    if isinstance(e, Tensor):
        return all(_basis_like(i) for i in e.items)
    if isinstance(e, Fold):
        return _basis_like(e.expr)
    return False


def _to_basis(e):
    if isinstance(e, BASIS_NODES):
        return e
    if isinstance(e, (QubitLit, Phase)):
        vec = _as_vector(e)
        if vec is None:
            return None
        return BasisLit((BasisVector(vec[0], vec[1], e.span),), e.span)
    if isinstance(e, Tensor):
        items = [_to_basis(i) for i in e.items]
        if any(i is None for i in items):
            return None
        return BasisTensor(tuple(items), e.span)
    if isinstance(e, Fold):
        inner = _to_basis(e.expr)
        return None if inner is None else BasisFold(inner, e.count, e.span)
    return None


class _ClassicalParser:
    """Bodies of ``classical`` definitions: bitwise expressions over inputs."""

    def __init__(self, p: _Parser, names: frozenset[str]):
        self.p = p
        self.names = names

    def expr(self):
        return self.or_()

    def _binary(self, op: str, sub):
        left = sub()
        while self.p.at_op(op):
            tok = self.p.advance()
            left = CBinOp(op, left, sub(), tok.span)
        return left

    def or_(self):
        return self._binary("|", self.xor)

    def xor(self):
        return self._binary("^", self.and_)

    def and_(self):
        return self._binary("&", self.eq)

    def eq(self):
        left = self.unary()
        if self.p.at_op("=="):
            tok = self.p.advance()
            return CEquals(left, self.p.dim(), tok.span)
        return left

    def unary(self):
        tok = self.p.peek()
        if self.p.accept_op("~"):
            return CNot(self.unary(), tok.span)
        return self.postfix()

    def postfix(self):
        e = self.primary()
        p = self.p
        while True:
            tok = p.peek()
            if p.accept_op("["):
                lo = p.dim()
                if p.accept_op(":"):
                    hi = p.dim()
                    p.expect_op("]")
                    e = CSlice(e, lo, hi, tok.span)
                else:
                    p.expect_op("]")
                    e = CIndex(e, lo, tok.span)
            elif p.accept_op("."):
                e = self.method(e)
            else:
                return e

    def method(self, e):
        p = self.p
        tok = p.ident()
        name = tok.lexeme
        p.expect_op("(")
        if name in ("xor_reduce", "and_reduce", "or_reduce"):
            p.expect_op(")")
            return CReduce(name.split("_")[0], e, tok.span)
        if name in ("rotl", "rotr"):
            amount = self.expr()
            p.expect_op(")")
            return CRotate(name, e, amount, tok.span)
        if name == "zero_extend":
            width = p.dim()
            p.expect_op(")")
            return CZeroExtend(e, width, tok.span)
        if name == "mul_const_mod":
            factor = p.dim()
            p.expect_op(",")
            modulus = p.dim()
            p.expect_op(")")
            return CMulMod(e, factor, modulus, tok.span)
        raise ParseError(f"unknown classical method {name!r}", tok.span,
                         frozenset({"xor_reduce", "and_reduce", "or_reduce", "rotl", "rotr",
                                    "zero_extend", "mul_const_mod"}))

    def primary(self):
        p = self.p
        tok = p.peek()
        if tok.kind == "ident":
            if tok.lexeme in self.names:
                p.advance()
                return CVar(tok.lexeme, tok.span)
            return CDim(p.dim(), tok.span)
        if tok.kind == "int":
            return CDim(p.dim(), tok.span)
        if tok.kind == "bits":
            p.advance()
            return CBits(tuple(int(c) for c in tok.lexeme[2:]), tok.span)
        if tok.is_("kw", "bit"):
            p.advance()
            p.expect_op("[")
            width = p.dim()
            p.expect_op("]")
            p.expect_op("(")
            value = p.dim()
            p.expect_op(")")
            return CConst(width, value, tok.span)
        if tok.is_("kw", "concat"):
            p.advance()
            p.expect_op("(")
            items = [self.expr()]
            while p.accept_op(","):
                items.append(self.expr())
            p.expect_op(")")
            return CConcat(tuple(items), tok.span)
        if p.accept_op("("):
            e = self.expr()
            p.expect_op(")")
            return e
        raise p.error("expected a classical expression",
                      {"identifier", "integer", "0b...", "bit", "concat", "("})
