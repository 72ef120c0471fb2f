import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from basisc.basis import (
    BasisValue, UnitaryBlock, desugar, fourier_matrix, gram_schmidt_extension, measurement_spec,
    predicated_unitary, span_distance, span_equal, translation_closed_form,
    translation_unitary, veclist,
)
from basisc.errors import IncompleteMeasureBasis, MatrixTooLarge, SpanMismatch
from basisc.parser import parse_expression
from basisc.syntax import Program
from basisc.simulator import lower_function

R = 1 / math.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
CNOT = np.eye(4)[[0, 1, 3, 2]]


def basis(src):
    return parse_expression(f"{src} >> {src}").src


def vl(src):
    return veclist(basis(src))


def lower(src):
    return lower_function(Program(()), parse_expression(src))


def test_veclist_builtins():
    assert np.allclose(vl("std").vectors, np.eye(2))
    plus, minus = np.array([R, R]), np.array([R, -R])
    want = [np.kron(a, b) for a in (plus, minus) for b in (plus, minus)]
    assert np.allclose(vl("pm[2]").vectors, want)
    assert np.allclose(vl("ij").vectors, [[R, 1j * R], [R, -1j * R]])
    assert np.allclose(vl("fourier[2]").vectors[1], 0.5 * np.array([1, 1j, -1, -1j]))


def test_literal_phases():
    v = vl("{'0', phase(pi/2)*'1'}").vectors
    assert np.allclose(v, [[1, 0], [0, 1j]])


def test_span_examples():
    assert span_equal(vl("std"), vl("pm"))
    assert not span_equal(vl("{'0'}"), vl("{'1'}"))
    assert math.isclose(span_distance(vl("{'0'}"), vl("{'1'}")), math.sqrt(2))
    assert span_equal(vl("fourier[1]"), vl("pm"))


def _random_subspace(rng, d, k):
    a = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    q, _ = np.linalg.qr(a)
    return BasisValue(int(math.log2(d)), q.T.copy())


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.data())
def test_span_distance_is_projector_frobenius_norm(m, data):
    d = 1 << m
    k1, k2 = data.draw(st.integers(1, d)), data.draw(st.integers(1, d))
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    a, b = _random_subspace(rng, d, k1), _random_subspace(rng, d, k2)
    assert math.isclose(span_distance(a, b), np.linalg.norm(a.projector - b.projector),
                        abs_tol=1e-9)


@pytest.mark.parametrize("src, want", [
    ("std >> {'1','0'}", X),
    ("std >> std", np.eye(2)),
    ("{'1'} + std >> {'1'} + {'1','0'}", CNOT),
    ("std >> fourier[1]", np.array([[R, R], [R, -R]])),
])
def test_translation_examples(src, want):
    e = parse_expression(src)
    assert np.allclose(translation_unitary(veclist(e.src), veclist(e.dst)).matrix, want,
                       atol=1e-12)
    assert np.allclose(lower(src), want, atol=1e-12)


def test_qft_translation():
    for n in (1, 2, 3):
        want = fourier_matrix(n).T  # column k is F_k
        assert np.allclose(lower(f"std[{n}] >> fourier[{n}]"), want)


def test_translation_rejects_different_spans():
    with pytest.raises(SpanMismatch):
        translation_unitary(vl("{'0'}"), vl("{'1'}"))


def test_gram_schmidt_extends_in_index_order():
    ext = gram_schmidt_extension(vl("{'+'}").vectors)
    assert np.allclose(ext, [[R, -R]])
    assert gram_schmidt_extension(np.eye(4, dtype=complex)).shape == (0, 4)


# random literal bases in one family, up to 3 qubits
FAMILIES = {"std": "01", "pm": "+-", "ij": "ij"}


@st.composite
def literal_pair(draw):
    m = draw(st.integers(1, 3))
    fam = FAMILIES[draw(st.sampled_from(sorted(FAMILIES)))]
    words = ["".join(fam[(k >> (m - 1 - i)) & 1] for i in range(m)) for k in range(1 << m)]
    chosen = draw(st.lists(st.sampled_from(words), min_size=1, max_size=1 << m, unique=True))
    perm = draw(st.permutations(chosen))
    angles = draw(st.lists(st.floats(-3, 3), min_size=len(chosen), max_size=len(chosen)))

    def lit(ws, phases=None):
        if phases is None:
            return "{" + ", ".join(f"'{w}'" for w in ws) + "}"
        return "{" + ", ".join(f"phase({a!r})*'{w}'" for w, a in zip(ws, phases)) + "}"

    return lit(chosen), lit(perm, angles)


@settings(max_examples=80, deadline=None)
@given(literal_pair())
def test_translation_is_unitary_and_elementwise(pair):
    a, b = vl(pair[0]), vl(pair[1])
    u = translation_unitary(a, b)
    assert u.is_unitary()
    assert np.linalg.norm(u.matrix @ a.vectors.T - b.vectors.T, axis=0).max() < 1e-9
    assert np.allclose(translation_closed_form(a, b), u.matrix, atol=1e-9)
    assert np.allclose(lower(f"{pair[0]} >> {pair[1]}"), u.matrix, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(-4, 4), st.floats(-4, 4), st.sampled_from(["std", "pm", "ij"]))
def test_rotate_composes(t1, t2, b):
    both = lower(f"{b}.rotate({t1!r}) | {b}.rotate({t2!r})")
    assert np.allclose(both, lower(f"{b}.rotate({t1 + t2!r})"), atol=1e-9)


def test_reverse_rotate_is_negative_rotate():
    assert np.allclose(lower("~std.rotate(pi/4)"), lower("std.rotate(-pi/4)"), atol=1e-9)


def test_predicated_unitary_examples():
    x = UnitaryBlock(1, X)
    assert np.allclose(predicated_unitary(vl("{'1'}"), x).matrix, CNOT)
    assert np.allclose(predicated_unitary(vl("std"), x).matrix, np.kron(np.eye(2), X))
    cz_plus = predicated_unitary(vl("{'+'}"), UnitaryBlock(1, Z)).matrix
    minus_zero = np.kron([R, -R], [1, 0])
    assert np.allclose(cz_plus @ minus_zero, minus_zero)
    assert np.allclose(lower("{'1'} & std.flip"), CNOT)
    assert np.allclose(lower("std & std.flip"), np.kron(np.eye(2), X))


def test_measurement_spec():
    spec = measurement_spec(vl("std[2]"))
    assert [spec.outcome(j) for j in range(4)] == ["00", "01", "10", "11"]
    f3 = measurement_spec(vl("fourier[3]"))
    assert np.abs(sum(f3.projectors()) - np.eye(8)).max() < 1e-9
    with pytest.raises(IncompleteMeasureBasis):
        measurement_spec(vl("{'+'}"))


def test_desugar_flip_and_prep():
    assert np.allclose(lower("std.flip"), lower("std >> {'1','0'}"))
    assert np.allclose(lower("'10+'.prep"), lower("std.flip + id + (std >> pm)"))
    assert np.allclose(lower("'-j'.prep"), lower("(std >> {'-','+'}) + (std >> {'j','i'})"))
    assert desugar(parse_expression("std.flip")) == parse_expression("std >> {'1','0'}")


def test_dense_limit():
    with pytest.raises(MatrixTooLarge):
        wide = BasisValue(15, np.zeros((1, 1 << 15), dtype=complex))
        translation_unitary(wide, wide)
