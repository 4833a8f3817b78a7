"""Tokenizer for the kernel DSL.

Time literals such as ``300ns`` or ``0.02us`` lex as single tokens: a numeric
literal immediately followed by letters must name a time unit, otherwise the
whole literal is rejected (``5.0xs`` is an error, not ``5.0`` then ``xs``).
"""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import LexError, Span
from .types import TIME_UNITS

KEYWORDS = {
    "package", "import", "operation", "opaque", "using",
    "if", "else", "while", "break", "continue", "return",
    "true", "false",
    "bool", "int", "double", "unit", "qubit", "time", "timer",
    "control", "invert", "duration",
}

# longest match first
PUNCT = [
    "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=",
    "(", ")", "{", "}", "[", "]", ",", ";", ":", ".",
    "=", "<", ">", "+", "-", "*", "/", "%", "!", "@",
]


@dataclass(frozen=True)
class Token:
    kind: str   # kw | ident | int | double | time | punct | eof
    value: object
    span: Span

    def __repr__(self) -> str:
        return f"{self.kind}:{self.value!r}"


def tokenize(source: str, filename: str = "<string>") -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def span() -> Span:
        return Span(filename, line, col)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                advance(1)
            continue
        if source.startswith("/*", i):
            start = span()
            advance(2)
            while i < n and not source.startswith("*/", i):
                advance(1)
            if i >= n:
                raise LexError("unterminated block comment", start)
            advance(2)
            continue
        if c.isdigit():
            start = span()
            j = i
            while j < n and source[j].isdigit():
                j += 1
            is_double = False
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                is_double = True
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    is_double = True
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            # a letter run directly after a number is a time unit
            k = j
            while k < n and (source[k].isalpha() or source[k] == "_"):
                k += 1
            if k > j:
                unit = source[j:k]
                if unit not in TIME_UNITS:
                    raise LexError(f"unknown time unit {unit!r}", start)
                advance(k - i)
                tokens.append(Token("time", (float(text), unit), start))
                continue
            advance(j - i)
            if is_double:
                tokens.append(Token("double", float(text), start))
            else:
                tokens.append(Token("int", int(text), start))
            continue
        if c.isalpha() or c == "_":
            start = span()
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            advance(j - i)
            if word in KEYWORDS:
                tokens.append(Token("kw", word, start))
            else:
                tokens.append(Token("ident", word, start))
            continue
        for p in PUNCT:
            if source.startswith(p, i):
                start = span()
                advance(len(p))
                tokens.append(Token("punct", p, start))
                break
        else:
            raise LexError(f"illegal character {c!r}", span())
    tokens.append(Token("eof", None, span()))
    return tokens
