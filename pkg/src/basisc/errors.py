"""Exception hierarchy shared by every pass.

Each family maps onto one CLI exit code: front-end errors exit 1, type
errors exit 2 and everything raised while simulating exits 3.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    """A 1-based (line, column) position in the source text."""

    line: int = 1
    column: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class BasiscError(Exception):
    """Root of all toolchain errors."""

    exit_code = 3


class FrontEndError(BasiscError):
    exit_code = 1


class LexError(FrontEndError):
    def __init__(self, message: str, span: Span):
        super().__init__(f"{span}: {message}")
        self.span = span


class ParseError(FrontEndError):
    def __init__(self, message: str, span: Span, expected: frozenset[str] = frozenset()):
        detail = message
        if expected:
            detail += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(f"{span}: {detail}")
        self.span = span
        self.expected = expected


class IoError(FrontEndError):
    pass


TYPE_ERROR_CODES = frozenset({
    "LinearityViolation",
    "DimMismatch",
    "NotABasis",
    "MixedEigenbasis",
    "DuplicateBasisVector",
    "SpanMismatch",
    "IncompleteMeasureBasis",
    "NotReversible",
    "ArityMismatch",
    "UnknownName",
    "UnboundDimVar",
    "FlipArity",
})


class TypeCheckError(BasiscError):
    """A rejected program. ``code`` is one of ``TYPE_ERROR_CODES``."""

    exit_code = 2

    def __init__(self, code: str, message: str, span: Span | None = None):
        assert code in TYPE_ERROR_CODES, code
        where = f"{span}: " if span is not None else ""
        super().__init__(f"{where}{code}: {message}")
        self.code = code
        self.message = message
        self.span = span


class UnboundDimVar(TypeCheckError):
    def __init__(self, name: str, span: Span | None = None):
        super().__init__("UnboundDimVar", f"no binding for dimension variable {name!r}", span)
        self.name = name


class NegativeDim(TypeCheckError):
    def __init__(self, message: str, span: Span | None = None):
        super().__init__("DimMismatch", message, span)


class RuntimeFault(BasiscError):
    """Raised while evaluating a program or a classical helper."""

    exit_code = 3


class CapacityExceeded(RuntimeFault):
    pass


class IndexCollision(RuntimeFault):
    pass


class DeadQubit(RuntimeFault):
    pass


class DegenerateState(RuntimeFault):
    pass


class DirtyDiscardZ(RuntimeFault):
    pass


class StuckExpression(RuntimeFault):
    pass


class MatrixTooLarge(RuntimeFault):
    pass


class FlipArity(RuntimeFault):
    pass


class SpanMismatch(RuntimeFault):
    pass


class IncompleteMeasureBasis(RuntimeFault):
    pass


class NotABijection(RuntimeFault):
    pass


class TableTooLarge(RuntimeFault):
    pass


class PhaseNeedsOneOutput(RuntimeFault):
    pass


class WidthMismatch(RuntimeFault):
    pass


class NeedMoreRows(RuntimeFault):
    pass


class NoConvergent(RuntimeFault):
    pass


class DriverFailed(RuntimeFault):
    """A driver exhausted its retry budget."""
