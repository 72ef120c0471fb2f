"""Tokenizer for ``.qw`` source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import LexError, Span

KEYWORDS = frozenset({
    "qpu", "classical", "rev", "repeat", "in", "pi", "phase", "phases",
    "id", "discard", "discardz", "std", "pm", "ij", "fourier",
    "qubit", "bit", "basis", "qfunc", "rev_qfunc", "cfunc", "concat",
})

OPERATORS = (
    "...", "->", ">>", "**", "//", "..", "==",
    "|", "&", "+", "-", "*", "/", "%", "~", "^", "(", ")", "[", "]",
    "{", "}", ",", ":", ";", ".", "=",
)

QUBIT_SYMBOLS = frozenset("01+-ij")

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<comment>\#[^\n]*)"
    r"|(?P<bits>0b[01]+)"
    r"|(?P<float>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)"
    r"|(?P<int>\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<qstr>'[^'\n]*')"
    r"|(?P<op>" + "|".join(re.escape(op) for op in OPERATORS) + ")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident int float bits qstr kw op eof
    lexeme: str
    span: Span

    def is_(self, kind: str, lexeme: str | None = None) -> bool:
        return self.kind == kind and (lexeme is None or self.lexeme == lexeme)


def lex(source: str) -> list[Token]:
    """Split ``source`` into tokens, dropping whitespace and comments."""
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        span = Span(line, pos - line_start + 1)
        if m is None:
            raise LexError(f"unexpected character {source[pos]!r}", span)
        kind = m.lastgroup
        text = m.group()
        if kind == "qstr":
            body = text[1:-1]
            bad = [c for c in body if c not in QUBIT_SYMBOLS]
            if bad or not body:
                raise LexError(f"qubit literal {text} may only contain 0 1 + - i j", span)
            tokens.append(Token("qstr", body, span))
        elif kind == "ident":
            tokens.append(Token("kw" if text in KEYWORDS else "ident", text, span))
        elif kind in ("int", "float", "bits", "op"):
            tokens.append(Token(kind, text, span))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    return tokens
