"""Classical post-processing used by the algorithm drivers."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import NeedMoreRows, NoConvergent

gcd = math.gcd


def lcm(a: int, b: int) -> int:
    return math.lcm(a, b)


def modinv(a: int, m: int) -> int:
    """Inverse of ``a`` modulo ``m``; ValueError when they share a factor."""
    return pow(a, -1, m)


def as_bin_frac(bits: str | Sequence[int]) -> Fraction:
    """Read bits b1 b2 ... as the binary fraction 0.b1b2..."""
    digits = "".join(str(int(b)) for b in bits)
    if not digits:
        return Fraction(0)
    return Fraction(int(digits, 2), 1 << len(digits))


def cfrac_convergents(x: Fraction) -> list[Fraction]:
    """Convergents of the continued-fraction expansion of ``x``, in order."""
    x = Fraction(x)
    terms = []
    num, den = x.numerator, x.denominator
    while den:
        q, r = divmod(num, den)
        terms.append(q)
        num, den = den, r
    out = []
    h_prev, h = 1, terms[0]
    k_prev, k = 0, 1
    out.append(Fraction(h, k))
    for a in terms[1:]:
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        out.append(Fraction(h, k))
    return out


def last_convergent_with_denominator_below(cs: Sequence[Fraction], n: int) -> Fraction:
    for c in reversed(cs):
        if c.denominator < n:
            return c
    raise NoConvergent(f"no convergent has denominator below {n}")


def _to_mask(row: str | Sequence[int]) -> int:
    return int("".join(str(int(b)) for b in row), 2)


def gf2_solve_nullspace(rows: Iterable[str | Sequence[int]], width: int | None = None) -> str:
    """The unique nonzero s with row . s = 0 for every row, when rank is N-1.

    Raises NeedMoreRows when the rows do not pin s down (rank below N-1)
    or leave only the zero vector (rank N).
    """
    rows = list(rows)
    if width is None:
        if not rows:
            raise NeedMoreRows("no rows")
        width = len(rows[0])
    pivots: dict[int, int] = {}  # pivot column (0 = leftmost) -> reduced row
    for row in rows:
        v = _to_mask(row)
        for col, prow in pivots.items():
            if v >> (width - 1 - col) & 1:
                v ^= prow
        if not v:
            continue
        col = next(c for c in range(width) if v >> (width - 1 - c) & 1)
        for c, prow in list(pivots.items()):
            if prow >> (width - 1 - col) & 1:
                pivots[c] = prow ^ v
        pivots[col] = v
    if len(pivots) != width - 1:
        raise NeedMoreRows(f"rank {len(pivots)}, need {width - 1}")
    free = next(c for c in range(width) if c not in pivots)
    s = 1 << (width - 1 - free)
    for col, prow in pivots.items():
        if prow >> (width - 1 - free) & 1:
            s |= 1 << (width - 1 - col)
    return format(s, f"0{width}b")


def dot2(a: str, b: str) -> int:
    return bin(_to_mask(a) & _to_mask(b)).count("1") % 2


def grover_success(n_qubits: int, n_answers: int, iterations: int) -> float:
    theta = math.asin(math.sqrt(n_answers / 2 ** n_qubits))
    return math.sin((2 * iterations + 1) * theta) ** 2


def grover_iterations(n_qubits: int, n_answers: int) -> int:
    """Closest integer to arccos(sqrt(M/N)) / (2 theta) with sin(theta) = sqrt(M/N).

    Ties round down, which picks the smaller of two equally good counts.
    """
    if not 1 <= n_answers <= 2 ** n_qubits:
        raise ValueError("need 1 <= answers <= 2^n")
    ratio = math.sqrt(n_answers / 2 ** n_qubits)
    theta = math.asin(ratio)
    x = math.acos(ratio) / (2 * theta)
    below = math.floor(x)
    return below if x - below <= 0.5 + 1e-9 else below + 1


def grover_iterations_brute(n_qubits: int, n_answers: int, search: int | None = None) -> int:
    """Smallest iteration count maximizing the success probability.

    The search covers the first period of the oscillation, where the
    rotation has not yet overshot past the answer subspace.
    """
    if search is None:
        theta = math.asin(math.sqrt(n_answers / 2 ** n_qubits))
        search = int(math.pi / (4 * theta)) + 1
    best, best_p = 0, -1.0
    for k in range(search + 1):
        p = grover_success(n_qubits, n_answers, k)
        if p > best_p + 1e-12:
            best, best_p = k, p
    return best
