import pytest

from basisc.drivers import Kernel, corpus_source

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def kernel():
    """kernel(file, entry, bindings, captures) -> compiled Kernel, memoized."""
    cache = {}

    def make(name, entry, bindings=None, captures=None, phases=None):
        key = (name, entry, tuple(sorted((bindings or {}).items())),
               tuple(sorted((captures or {}).items(), key=str)), tuple(phases or ()))
        if key not in cache:
            cache[key] = Kernel(corpus_source(name), entry, bindings, captures, phases)
        return cache[key]

    return make
