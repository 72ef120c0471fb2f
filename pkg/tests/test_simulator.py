import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from basisc.drivers import Kernel, corpus_source
from basisc.errors import CapacityExceeded, DirtyDiscardZ
from basisc.parser import parse_expression, parse_source
from basisc.simulator import (
    RngStream, StateVector, final_state, lower_function, run_kernel,
)
from basisc.syntax import Program
from basisc.typecheck import BitsValue, FuncRef, check_program

R = 1 / math.sqrt(2)
I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
H = np.array([[R, R], [R, -R]], dtype=complex)
S_IJ = np.array([[R, R], [1j * R, -1j * R]])  # columns |i>, |j>
CNOT = np.eye(4)[[0, 1, 3, 2]]
F2 = np.array([[1j ** (j * k) for k in range(4)] for j in range(4)]) / 2


def lower(src):
    return lower_function(Program(()), parse_expression(src))


def program(src):
    p = parse_source(src)
    check_program(p)
    return p


# -- examples ---------------------------------------------------------------

def test_phase_rule_at_pi():
    assert np.allclose(lower("phase(pi)*std.flip"), -X)
    assert np.allclose(lower("phase(pi)*id"), -I2)


def test_measure_statistics():
    hist = run_kernel(program("qpu k() -> bit[2]:\n    '+'[2] | std[2].measure\n"), 4000, 3, entry="k")
    assert sorted(hist.counts) == ["00", "01", "10", "11"]
    assert all(abs(c / 4000 - 0.25) < 0.03 for c in hist.counts.values())
    assert sum(hist.counts.values()) == 4000


def test_measure_in_another_basis_is_deterministic():
    hist = run_kernel(program("qpu k() -> bit[2]:\n    '-+' | pm[2].measure\n"), 200, 0, entry="k")
    assert hist.counts == {"10": 200}


def test_discard_leaves_the_rest():
    p = program("qpu k() -> qubit:\n    '+' + '1' | discard + id\n")
    assert np.allclose(final_state(p, "k"), [0, 1])


def test_discardz():
    src = ("qpu rev clean(q: qubit) -> qubit:\n    q + '0' | id + discardz\n"
           "qpu rev dirty(q: qubit) -> qubit:\n    q + '0' | id + (std >> pm) | id + discardz\n"
           "qpu a() -> qubit:\n    '-' | clean\n"
           "qpu b() -> qubit:\n    '-' | dirty\n")
    p = program(src)
    assert np.allclose(final_state(p, "a"), [R, -R])
    with pytest.raises(DirtyDiscardZ):
        final_state(p, "b")


def test_capacity():
    p = program("qpu k() -> bit[5]:\n    '+'[5] | std[5].measure\n")
    with pytest.raises(CapacityExceeded):
        run_kernel(p, 1, 0, cap=4, entry="k")
    assert run_kernel(p, 1, 0, cap=5, entry="k").shots == 1


def test_rng_stream_is_reproducible():
    a, b, c = RngStream(7, 2), RngStream(7, 2), RngStream(7, 3)
    xs = [a.uniform() for _ in range(5)]
    assert xs == [b.uniform() for _ in range(5)]
    assert xs != [c.uniform() for _ in range(5)]
    assert a.draws == 5


def test_runs_are_deterministic():
    k1 = Kernel(corpus_source("ghz"), "ghz", {"N": 4})
    k2 = Kernel(corpus_source("ghz"), "ghz", {"N": 4})
    assert k1.histogram(300, 11).to_json() == k2.histogram(300, 11).to_json()
    assert k1.histogram(300, 11).to_json() != k1.histogram(300, 12).to_json()


def test_ancilla_ids_are_recycled():
    sv = StateVector(cap=3)
    a = sv.alloc(2)
    sv.discard(a[0])
    assert sv.alloc(1) == [a[0]]


# -- invariants over the corpus ---------------------------------------------

CORPUS = [
    ("bv", "bv_secret", {}, {"s": BitsValue((1, 0, 1))}),
    ("deutsch", "deutsch", {}, {"f": FuncRef("negate")}),
    ("dj", "dj", {"N": 3}, {"f": FuncRef("parity")}),
    ("ghz", "ghz", {"N": 3}, {}),
    ("period", "period_lower", {"M": 4, "K": 2}, {}),
    ("simon", "simon", {"N": 3}, {"f": FuncRef("simon_101")}),
    ("qpe", "qpe_tilt", {"T": 3, "P": 1, "D": 8}, {}),
    ("grover", "grover_all_ones", {"N": 3, "I": 2}, {}),
    ("fixpoint", "fixpoint_all_ones", {"N": 3, "L": 1}, {}),
]


@pytest.mark.parametrize("name, entry, bindings, captures", CORPUS,
                         ids=[c[0] for c in CORPUS])
def test_every_step_preserves_the_norm(monkeypatch, name, entry, bindings, captures):
    worst = []

    def hook(sv):
        worst.append(abs(sv.norm() ** 2 - sv.batch))

    monkeypatch.setattr(StateVector, "step_hook", staticmethod(hook))
    phases = [math.pi] * 2 if name == "fixpoint" else None
    Kernel(corpus_source(name), entry, bindings, captures, phases).histogram(3, 0)
    assert worst and max(worst) < 1e-9


# -- random pipelines -------------------------------------------------------

# (source, inputs, dense reference) for reversible pieces
PIECES = [
    ("id", 1, I2),
    ("std.flip", 1, X),
    ("std >> pm", 1, H),
    ("pm >> std", 1, H),
    ("std >> ij", 1, S_IJ),
    ("'1' & std.flip", 2, CNOT),
    ("std[2] >> fourier[2]", 2, F2.T),
    ("phase(pi/3)*std.flip", 1, np.exp(1j * math.pi / 3) * X),
]


@st.composite
def layer(draw, n):
    parts, width = [], 0
    while width < n:
        src, k, u = draw(st.sampled_from([p for p in PIECES if p[1] <= n - width]))
        if draw(st.booleans()):
            src, u = f"~({src})", u.conj().T
        parts.append((src, u))
        width += k
    mat = parts[0][1]
    for _, u in parts[1:]:
        mat = np.kron(mat, u)
    return " + ".join(f"({s})" for s, _ in parts), mat


@st.composite
def pipeline(draw):
    n = draw(st.integers(1, 4))
    start = draw(st.text("01+-ij", min_size=n, max_size=n))
    layers = draw(st.lists(layer(n), min_size=1, max_size=4))
    return n, start, layers


LITERAL = {"0": [1, 0], "1": [0, 1], "+": [R, R], "-": [R, -R], "i": [R, 1j * R],
           "j": [R, -1j * R]}


def reference(start, layers):
    psi = np.array([1], dtype=complex)
    for c in start:
        psi = np.kron(psi, LITERAL[c])
    for _, u in layers:
        psi = u @ psi
    return psi


@settings(max_examples=1000, deadline=None)
@given(pipeline())
def test_random_pipelines_run_and_match_reference(case):
    n, start, layers = case
    body = f"'{start}' | " + " | ".join(src for src, _ in layers)
    p = program(f"qpu k() -> qubit[{n}]:\n    {body}\n")
    psi = final_state(p, "k")
    assert abs(np.linalg.norm(psi) - 1) < 1e-9
    assert np.allclose(psi, reference(start, layers), atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.lists(layer(n), min_size=1, max_size=3)))
def test_reverse_undoes_a_function(layers):
    f = " | ".join(f"({src})" for src, _ in layers)
    u = lower(f"{f} | ~({f})")
    assert np.allclose(u, np.eye(len(u)), atol=1e-9)
