import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from basisc.classical import (
    eval_classical, inplace_embedding, phase_embedding, table_from_words, truth_table,
    xor_embedding,
)
from basisc.errors import (
    NotABijection, PhaseNeedsOneOutput, TableTooLarge, WidthMismatch,
)
from basisc.parser import parse_source
from basisc.typecheck import BitsValue, monomorphize

SOURCE = """
classical parity(x: bit[4]) -> bit:
    x.xor_reduce()

classical bv_oracle(x: bit[3]) -> bit:
    (x & 0b110).xor_reduce()

classical times7(x: bit[4]) -> bit[4]:
    x.mul_const_mod(7, 15)

classical times13(x: bit[4]) -> bit[4]:
    x.mul_const_mod(13, 15)

classical ident(x: bit) -> bit:
    x

classical ident4(x: bit[4]) -> bit[4]:
    x

classical all_ones(x: bit[2]) -> bit:
    x.and_reduce()

classical one(x: bit[2]) -> bit:
    bit[1](1)

classical zero4(x: bit[4]) -> bit[4]:
    bit[4](0)

classical mix(x: bit[4]) -> bit[5]:
    concat(x[1:3].rotl(1), ~x[0], x[3] | x[0], (x ^ 0b1010) == 0)

classical wide(x: bit[21]) -> bit:
    x.or_reduce()

classical sdot[N](s: bit[N]; x: bit[N]) -> bit:
    (x & s).xor_reduce()
"""

PROGRAM = parse_source(SOURCE)


def fn(name):
    return PROGRAM.get(name)


def test_eval_examples():
    assert eval_classical(fn("parity"), "1101") == "1"
    assert eval_classical(fn("bv_oracle"), "100") == "1"
    assert eval_classical(fn("times7"), "0001") == "0111"


def test_eval_operators():
    # x = 1010: x[1:3] = 01 -> rotl 10; ~x[0] = 0; x[3]|x[0] = 1; x ^ 1010 == 0 -> 1
    assert eval_classical(fn("mix"), "1010") == "10011"
    assert eval_classical(fn("mix"), "0000") == "00100"
    assert eval_classical(fn("mix"), "0110") == "11100"


def test_width_mismatch():
    with pytest.raises(WidthMismatch):
        eval_classical(fn("parity"), "101")


def test_capture_is_specialized():
    p = monomorphize(PROGRAM, "sdot", {}, {"s": BitsValue((1, 1, 0))})
    assert eval_classical(p.get(p.entry), "100") == "1"
    assert eval_classical(p.get(p.entry), "001") == "0"


def test_truth_tables():
    assert list(truth_table(fn("ident")).outputs) == [0, 1]
    assert list(truth_table(fn("all_ones")).outputs) == [0, 0, 0, 1]
    assert list(truth_table(fn("one")).outputs) == [1, 1, 1, 1]
    with pytest.raises(TableTooLarge):
        truth_table(fn("wide"))


def test_xor_embedding_examples():
    cnot = xor_embedding(truth_table(fn("ident")))
    assert list(cnot.perm) == [0, 1, 3, 2]
    ones = xor_embedding(truth_table(fn("all_ones")))
    assert ones.perm[0b110] == 0b111
    assert ones.perm[0b100] == 0b100


def test_phase_embedding_examples():
    assert list(phase_embedding(truth_table(fn("all_ones"))).mask) == [1, 1, 1, -1]
    with pytest.raises(PhaseNeedsOneOutput):
        phase_embedding(truth_table(fn("times7")))


def test_inplace_examples():
    mul = inplace_embedding(truth_table(fn("times7")), truth_table(fn("times13")))
    assert sorted(mul.perm) == list(range(16))
    assert mul.perm[1] == 7
    assert mul.perm[15] == 15  # outside the residues
    ident = inplace_embedding(truth_table(fn("ident4")), truth_table(fn("ident4")))
    assert list(ident.perm) == list(range(16))
    with pytest.raises(NotABijection):
        inplace_embedding(truth_table(fn("zero4")), truth_table(fn("ident4")))


@st.composite
def tables(draw, max_in=4, max_out=4):
    n_in = draw(st.integers(1, max_in))
    n_out = draw(st.integers(1, max_out))
    words = draw(st.lists(st.integers(0, (1 << n_out) - 1), min_size=1 << n_in,
                          max_size=1 << n_in))
    return table_from_words(n_in, n_out, words)


@settings(max_examples=100, deadline=None)
@given(tables())
def test_xor_embedding_is_an_involution(t):
    action = xor_embedding(t)
    assert sorted(action.perm) == list(range(1 << action.width))
    assert (action.perm[action.perm] == np.arange(1 << action.width)).all()


@settings(max_examples=100, deadline=None)
@given(tables(), st.integers(0, 2**32 - 1))
def test_permutation_action_matches_matrix(t, seed):
    action = xor_embedding(t)
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=1 << action.width) + 1j * rng.normal(size=1 << action.width)
    assert np.abs(action.apply(psi) - action.matrix() @ psi).max() < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.permutations(list(range(8))))
def test_inplace_of_random_bijection(perm):
    inverse = [0] * 8
    for x, y in enumerate(perm):
        inverse[y] = x
    action = inplace_embedding(table_from_words(3, 3, perm), table_from_words(3, 3, inverse))
    assert list(action.perm) == list(perm)
