"""Host-side loops around the corpus kernels.

Each driver compiles one corpus program, runs its kernel as often as the
algorithm needs, and post-processes the bits classically. Kernel
invocation i of a driver run draws from RngStream(seed, i), so a driver
is as deterministic as a single ``run``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Callable, Mapping, Sequence

from . import post
from .classical import eval_classical
from .errors import DriverFailed, NeedMoreRows, NoConvergent
from .parser import parse_source
from .simulator import DEFAULT_CAP, Histogram, LoweringCache, RngStream, run_shot
from .syntax import Program
from .typecheck import BitsValue, FuncRef, check_program, monomorphize


def corpus_source(name: str) -> str:
    """Text of a bundled example program, e.g. ``corpus_source("bv")``."""
    return resources.files("basisc.corpus").joinpath(f"{name}.qw").read_text()


def corpus_names() -> list[str]:
    return sorted(p.name[:-3] for p in resources.files("basisc.corpus").iterdir()
                  if p.name.endswith(".qw"))


@lru_cache(maxsize=None)
def _parsed(source: str) -> Program:
    return parse_source(source)


class Kernel:
    """A compiled, checked entry point that can be run shot by shot."""

    def __init__(self, source: str, entry: str, bindings: Mapping[str, int] | None = None,
                 captures: Mapping[str, object] | None = None,
                 phases: Sequence[float] | None = None, cap: int = DEFAULT_CAP):
        self.program = monomorphize(_parsed(source), entry, bindings, captures, phases)
        check_program(self.program)
        self.cache = LoweringCache(self.program)
        self.cap = cap
        self.oracle_calls = 0
        self.invocations = 0

    def shot(self, seed: int, index: int) -> str:
        bits, sv = run_shot(self.program, RngStream(seed, index), self.cap, cache=self.cache)
        self.invocations += 1
        self.oracle_calls += sum(sv.oracle_calls.values())
        return bits

    def histogram(self, shots: int, seed: int) -> Histogram:
        hist = Histogram(shots, seed)
        for i in range(shots):
            hist.add(self.shot(seed, i))
        return hist


@dataclass
class DriverConfig:
    bindings: dict[str, int] = field(default_factory=dict)
    args: dict[str, str] = field(default_factory=dict)
    shots: int = 1
    seed: int = 0
    cap: int = DEFAULT_CAP
    phases: list[float] | None = None


@dataclass
class DriverResult:
    answer: str
    invocations: int = 0
    oracle_calls: int = 0
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------- oracles

def deutsch(cfg: DriverConfig) -> DriverResult:
    f = cfg.args.get("f", "identity")
    k = Kernel(corpus_source("deutsch"), "deutsch", captures={"f": FuncRef(f)}, cap=cfg.cap)
    hist = k.histogram(cfg.shots, cfg.seed)
    answers = {"0": "constant", "1": "balanced"}
    verdicts = {answers[b] for b in hist.counts}
    answer = verdicts.pop() if len(verdicts) == 1 else "inconsistent"
    return DriverResult(answer, k.invocations, k.oracle_calls, {"counts": hist.counts})


def dj(cfg: DriverConfig) -> DriverResult:
    n = cfg.bindings.get("N", 3)
    f = cfg.args.get("f", "parity")
    k = Kernel(corpus_source("dj"), "dj", {"N": n}, {"f": FuncRef(f)}, cap=cfg.cap)
    hist = k.histogram(cfg.shots, cfg.seed)
    verdicts = {"constant" if set(b) == {"0"} else "balanced" for b in hist.counts}
    answer = verdicts.pop() if len(verdicts) == 1 else "inconsistent"
    return DriverResult(answer, k.invocations, k.oracle_calls, {"counts": hist.counts})


def bv(cfg: DriverConfig) -> DriverResult:
    s = cfg.args.get("s", "1101")
    k = Kernel(corpus_source("bv"), "bv_secret",
               captures={"s": BitsValue(tuple(int(c) for c in s))}, cap=cfg.cap)
    hist = k.histogram(cfg.shots, cfg.seed)
    answer = hist.most_common()[0][0]
    return DriverResult(answer, k.invocations, k.oracle_calls, {"counts": hist.counts})


def period(cfg: DriverConfig, retries: int = 10) -> DriverResult:
    """Period of the lower-K-bits function from pairs of Fourier samples."""
    m = cfg.bindings.get("M", 5)
    kk = cfg.bindings.get("K", 2)
    k = Kernel(corpus_source("period"), "period_lower", {"M": m, "K": kk}, cap=cfg.cap)
    f = k.program.get(next(n for n in k.program.names() if n.startswith("lower_bits")))
    table = [eval_classical(f, format(x, f"0{m}b")) for x in range(1 << m)]

    def is_period(r: int) -> bool:
        return 0 < r < (1 << m) and all(table[x] == table[x + r] for x in range((1 << m) - r))

    shot = 0
    for attempt in range(1, retries + 1):
        denominators = []
        for _ in range(2):
            frac = post.as_bin_frac(k.shot(cfg.seed, shot))
            shot += 1
            denominators.append(frac.denominator)
        r = post.lcm(*denominators)
        if is_period(r):
            return DriverResult(str(r), k.invocations, k.oracle_calls, {"attempts": attempt})
    raise DriverFailed(f"no period found in {retries} attempts")


def _simon_source(s: str) -> str:
    """x ^ (x[p] ? s : 0) with p the leading one of s: a 2-to-1 map with f(x) = f(x ^ s)."""
    n, p = len(s), s.index("1")
    spread = ", ".join([f"x[{p}]"] * n)
    return (f"classical simon_oracle(x: bit[{n}]) -> bit[{n}]:\n"
            f"    x ^ (concat({spread}) & 0b{s})\n")


def simon(cfg: DriverConfig, budget: int = 25) -> DriverResult:
    """Collect rows orthogonal to s until they pin s down."""
    s = cfg.args.get("s", "101")
    source = corpus_source("simon")
    if s == "101":
        oracle = "simon_101"
    else:
        source += "\n" + _simon_source(s)
        oracle = "simon_oracle"
    n = len(s)
    k = Kernel(source, "simon", {"N": n}, {"f": FuncRef(oracle)}, cap=cfg.cap)
    rows: list[str] = []
    for i in range(budget):
        row = k.shot(cfg.seed, i)
        if "1" in row:
            rows.append(row)
        if len(rows) >= n - 1:
            try:
                found = post.gf2_solve_nullspace(rows, n)
            except NeedMoreRows:
                continue
            return DriverResult(found, k.invocations, k.oracle_calls, {"rows": rows})
    raise DriverFailed(f"rows did not determine s within {budget} invocations")


# --------------------------------------------------------------- factoring

def qpe(cfg: DriverConfig) -> DriverResult:
    """Phase of a std.rotate eigenvector, as a binary fraction."""
    b = {"T": 3, "P": 1, "D": 8, **cfg.bindings}
    k = Kernel(corpus_source("qpe"), "qpe_tilt", b, cap=cfg.cap)
    hist = k.histogram(cfg.shots, cfg.seed)
    bits = hist.most_common()[0][0]
    return DriverResult(str(post.as_bin_frac(bits)), k.invocations, k.oracle_calls,
                        {"bits": bits, "counts": hist.counts})


def order_precision(n: int, eps: float = 0.25) -> tuple[int, int]:
    """Work-register width L and phase precision T for order finding mod n."""
    width = max(1, math.ceil(math.log2(n)))
    t = 2 * width + 1 + math.ceil(math.log2(2 + 1 / (2 * eps)))
    return width, t


@dataclass
class _OrderFinder:
    x: int
    n: int
    seed: int
    cap: int
    shot: int = 0

    def __post_init__(self):
        width, t = order_precision(self.n)
        self.kernel = Kernel(corpus_source("order_finding"), "order_finding",
                             {"X": self.x, "XINV": post.modinv(self.x, self.n), "N": self.n,
                              "L": width, "T": t}, cap=self.cap)

    def sample(self) -> int:
        frac = post.as_bin_frac(self.kernel.shot(self.seed, self.shot))
        self.shot += 1
        try:
            conv = post.last_convergent_with_denominator_below(
                post.cfrac_convergents(frac), self.n)
        except NoConvergent:
            return 1
        return conv.denominator

    def order(self, retries: int) -> int | None:
        for _ in range(retries):
            r = post.lcm(self.sample(), self.sample())
            if pow(self.x, r, self.n) == 1:
                return r
        return None


def order_finding(cfg: DriverConfig, retries: int = 10) -> DriverResult:
    x = cfg.bindings.get("X", 7)
    n = cfg.bindings.get("N", 15)
    finder = _OrderFinder(x, n, cfg.seed, cfg.cap)
    r = finder.order(retries)
    if r is None:
        raise DriverFailed(f"order of {x} mod {n} not found in {retries} attempts")
    k = finder.kernel
    return DriverResult(str(r), k.invocations, k.oracle_calls)


def shors(cfg: DriverConfig, attempts: int = 10) -> DriverResult:
    """A nontrivial factor of N by reduction to order finding."""
    n = cfg.bindings.get("N", 15)
    if n % 2 == 0:
        return DriverResult("2")
    for b in range(2, int(math.log2(n)) + 1):
        a = round(n ** (1 / b))
        for c in (a - 1, a, a + 1):
            if c > 1 and c ** b == n:
                return DriverResult(str(c))
    rng = random.Random(cfg.seed)
    invocations = oracle_calls = 0
    for attempt in range(attempts):
        x = rng.randrange(2, n)
        g = math.gcd(x, n)
        if g > 1:
            return DriverResult(str(g), invocations, oracle_calls, {"x": x, "lucky": True})
        finder = _OrderFinder(x, n, cfg.seed + attempt * 7919, cfg.cap)
        r = finder.order(2)
        invocations += finder.kernel.invocations
        oracle_calls += finder.kernel.oracle_calls
        if r is None or r % 2 or pow(x, r // 2, n) == n - 1:
            continue
        for cand in (math.gcd(pow(x, r // 2, n) - 1, n), math.gcd(pow(x, r // 2, n) + 1, n)):
            if 1 < cand < n:
                return DriverResult(str(cand), invocations, oracle_calls, {"x": x, "r": r})
    raise DriverFailed(f"no factor of {n} in {attempts} attempts")


# ------------------------------------------------------------------ search

def _filter(hist: Histogram, f: Callable[[str], str]) -> list[str]:
    return sorted(b for b in hist.counts if f(b) == "1")


def grover(cfg: DriverConfig) -> DriverResult:
    n = cfg.bindings.get("N", 3)
    answers = cfg.bindings.get("M", 1)
    iters = cfg.bindings.get("I", post.grover_iterations(n, answers))
    k = Kernel(corpus_source("grover"), "grover_all_ones", {"N": n, "I": iters}, cap=cfg.cap)
    hist = k.histogram(cfg.shots, cfg.seed)
    oracle = k.program.get(f"all_ones[{n}]")
    good = _filter(hist, lambda b: eval_classical(oracle, b))
    return DriverResult(" ".join(good) or "none", k.invocations, k.oracle_calls,
                        {"iterations": iters, "counts": hist.counts})


def fixpoint(cfg: DriverConfig) -> DriverResult:
    n = cfg.bindings.get("N", 3)
    phases = cfg.phases
    if phases is None:
        steps = cfg.bindings.get("L", post.grover_iterations(n, cfg.bindings.get("M", 1)))
        phases = [math.pi] * (2 * steps)
    steps = cfg.bindings.get("L", len(phases) // 2)
    k = Kernel(corpus_source("fixpoint"), "fixpoint_all_ones", {"N": n, "L": steps},
               phases=phases, cap=cfg.cap)
    hist = k.histogram(cfg.shots, cfg.seed)
    oracle = k.program.get(f"all_ones[{n}]")
    good = _filter(hist, lambda b: eval_classical(oracle, b))
    return DriverResult(" ".join(good) or "none", k.invocations, k.oracle_calls,
                        {"iterations": steps, "counts": hist.counts})


def match_indices(hay: str, pat: str) -> list[int]:
    """Offsets k where the haystack rotated left by k starts with the pattern."""
    n = len(hay)
    return [k for k in range(n) if (hay[k:] + hay[:k])[:len(pat)] == pat]


def match(cfg: DriverConfig) -> DriverResult:
    """Offsets of a needle in a cyclic haystack.

    ``M`` is the number of expected matches and sets the default number of
    amplification rounds. Outcomes seen at least half as often as the most
    frequent one are reported.
    """
    hay = cfg.args.get("hay", "00110100")
    pat = cfg.args.get("pat", "11")
    width = len(hay)
    kbits = max(1, math.ceil(math.log2(width)))
    if 1 << kbits != width:
        raise DriverFailed("haystack width must be a power of two")
    phases = cfg.phases
    if phases is None:
        steps = cfg.bindings.get("L", post.grover_iterations(kbits, cfg.bindings.get("M", 1)))
        phases = [math.pi] * (2 * steps)
    steps = cfg.bindings.get("L", len(phases) // 2)
    k = Kernel(corpus_source("match"), "match",
               {"K": kbits, "N": width, "M": len(pat), "L": steps},
               {"hay": BitsValue(tuple(int(c) for c in hay)),
                "pat": BitsValue(tuple(int(c) for c in pat))},
               phases=phases, cap=cfg.cap)
    hist = k.histogram(cfg.shots, cfg.seed)
    ranked = hist.most_common()
    top = ranked[0][1]
    modal = sorted(int(b, 2) for b, c in ranked if 2 * c >= top)
    return DriverResult(" ".join(map(str, modal)), k.invocations, k.oracle_calls,
                        {"counts": hist.counts, "iterations": steps})


DRIVERS: dict[str, Callable[[DriverConfig], DriverResult]] = {
    "deutsch": deutsch,
    "dj": dj,
    "bv": bv,
    "period": period,
    "simon": simon,
    "qpe": qpe,
    "order_finding": order_finding,
    "shors": shors,
    "grover": grover,
    "fixpoint": fixpoint,
    "match": match,
}


def run_driver(name: str, cfg: DriverConfig | None = None) -> DriverResult:
    if name not in DRIVERS:
        raise DriverFailed(f"unknown driver {name!r}; choose from {', '.join(DRIVERS)}")
    return DRIVERS[name](cfg or DriverConfig())


__all__ = ["DRIVERS", "DriverConfig", "DriverResult", "Kernel", "corpus_names",
           "corpus_source", "match_indices", "order_precision", "run_driver", "Fraction"]
