import pytest
from hypothesis import given, settings, strategies as st

from basisc.drivers import corpus_names, corpus_source
from basisc.errors import IoError, LexError, NegativeDim, ParseError, UnboundDimVar
from basisc.lexer import lex
from basisc.parser import parse_expression, parse_file, parse_source
from basisc.syntax import (
    BasisTensor, DimBinOp, DimConst, DimVar, Pm, QubitLit, Std, Tensor, Translate, UnitLit,
    bits_to_int, dim_eval, int_to_bits, normalize_tensors, pretty, substitute_dims,
)


def test_lexer_keeps_qubit_strings_whole():
    tokens = [(t.kind, t.lexeme) for t in lex("'10+' | std.flip")][:3]
    assert tokens == [("qstr", "10+"), ("op", "|"), ("kw", "std")]


def test_lexer_rejects_bad_qubit_symbol():
    with pytest.raises(LexError):
        lex("'0x'")


def test_parse_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse_source("qpu k() -> bit:\n    '0' | | std.measure\n")
    assert exc.value.span.line == 2


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(IoError):
        parse_file(tmp_path / "nope.qw")


@pytest.mark.parametrize("name", corpus_names())
def test_corpus_round_trips_through_pretty(name):
    program = parse_source(corpus_source(name))
    assert parse_source(pretty(program)) == program


def test_qubit_literal_fold():
    e = parse_expression("'+'[3]")
    assert isinstance(e, QubitLit)
    assert substitute_dims(parse_expression("'+'[N]"), {"N": 3}) == e
    assert e.expanded() == "+++"


def test_translation_node():
    e = parse_expression("std >> pm")
    assert e == Translate(Std(DimConst(1)), Pm(DimConst(1)))


def test_dim_arithmetic():
    two_l_plus_one = DimBinOp("+", DimBinOp("*", DimConst(2), DimVar("L")), DimConst(1))
    assert dim_eval(two_l_plus_one, {"L": 4}) == 9
    assert dim_eval(DimBinOp("**", DimConst(2), DimVar("J")), {"J": 3}) == 8
    with pytest.raises(UnboundDimVar):
        dim_eval(DimVar("N"), {})
    with pytest.raises(NegativeDim):
        dim_eval(DimBinOp("-", DimConst(1), DimConst(2)), {})


def test_substitute_leaves_constant_expression_alone():
    e = parse_expression("'0' | std.flip")
    assert substitute_dims(e, {}) == e


def test_unit_is_the_empty_tensor():
    lit = QubitLit("1")
    assert normalize_tensors(Tensor((UnitLit(), lit))) == lit
    assert normalize_tensors(Tensor((Tensor((lit, lit)), lit))) == Tensor((lit, lit, lit))
    assert normalize_tensors(BasisTensor((BasisTensor((Std(), Pm())), Std()))) == \
        BasisTensor((Std(), Pm(), Std()))


@given(st.integers(0, 10), st.data())
def test_int_bits_round_trip(width, data):
    value = data.draw(st.integers(0, (1 << width) - 1))
    assert bits_to_int(int_to_bits(value, width)) == value


# -- random surface programs -------------------------------------------------

angles = st.sampled_from(["0.5", "pi/4", "-1.25", "2*pi/3"])
one_basis = st.sampled_from(["std", "pm", "ij", "{'0','1'}", "{'+','-'}", "{'1'}",
                             "{'i', phase(0.5)*'j'}"])
bases = st.lists(one_basis, min_size=1, max_size=3).map(" + ".join)
symbols = st.text("01+-ij", min_size=1, max_size=4)


def _functions():
    leaves = st.one_of(
        st.sampled_from(["id", "std.flip", "pm.flip", "std.measure", "pm.measure", "discard",
                         "fourier[2] >> std[2]", "std >> pm"]),
        angles.map(lambda a: f"std.rotate({a})"),
        symbols.map(lambda s: f"'{s}'.prep"),
    )

    def extend(inner):
        return st.one_of(
            inner.map(lambda f: f"~({f})"),
            st.tuples(inner, inner).map(lambda p: f"({p[0]}) + ({p[1]})"),
            st.tuples(inner, inner).map(lambda p: f"({p[0]}) | ({p[1]})"),
            st.tuples(one_basis, inner).map(lambda p: f"{p[0]} & ({p[1]})"),
            st.tuples(angles, inner).map(lambda p: f"phase({p[0]})*({p[1]})"),
        )

    return st.recursive(leaves, extend, max_leaves=6)


expressions = st.one_of(
    symbols.map(lambda s: f"'{s}'"),
    st.tuples(symbols, _functions()).map(lambda p: f"'{p[0]}' | {p[1]}"),
    st.tuples(bases, bases).map(lambda p: f"{p[0]} >> {p[1]}"),
)


@settings(max_examples=200, deadline=None)
@given(expressions)
def test_pretty_parse_round_trip(source):
    e = parse_expression(source)
    assert parse_expression(pretty(e)) == e


@settings(max_examples=200, deadline=None)
@given(expressions)
def test_normalize_tensors_is_idempotent(source):
    once = normalize_tensors(parse_expression(source))
    assert normalize_tensors(once) == once


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 3))
def test_substitution_commutes_with_normalization(n, j):
    e = parse_expression("('+'[N] + '0') + ('1'[2 ** J] + ()) | std[N + 1 + 2 ** J].measure")
    env = {"N": n, "J": j}
    assert substitute_dims(normalize_tensors(e), env) == normalize_tensors(substitute_dims(e, env))
