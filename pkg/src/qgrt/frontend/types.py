"""Kernel-language types and their canonical text form.

The text form doubles as the result-type descriptor exchanged between the
compiler and the runtime decoder (e.g. ``(int,int)``, ``int[][]``), so
``parse_type_text(type_text(t)) == t`` must hold for every classical type.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError


@dataclass(frozen=True)
class Prim:
    kind: str  # bool | int | double | unit | qubit | time | timer

    def __repr__(self) -> str:
        return self.kind


@dataclass(frozen=True)
class ArrayT:
    elem: "QType"

    def __repr__(self) -> str:
        return f"{self.elem!r}[]"


@dataclass(frozen=True)
class TupleT:
    elems: tuple["QType", ...]

    def __repr__(self) -> str:
        return "(" + ",".join(repr(e) for e in self.elems) + ")"


@dataclass(frozen=True)
class OpT:
    params: tuple["QType", ...]
    ret: "QType"

    def __repr__(self) -> str:
        return "(" + ",".join(repr(p) for p in self.params) + ")->" + repr(self.ret)


QType = Prim | ArrayT | TupleT | OpT

BOOL = Prim("bool")
INT = Prim("int")
DOUBLE = Prim("double")
UNIT = Prim("unit")
QUBIT = Prim("qubit")
TIME = Prim("time")
TIMER = Prim("timer")

PRIMS = {t.kind: t for t in (BOOL, INT, DOUBLE, UNIT, QUBIT, TIME, TIMER)}

# ns per unit; canonical time form is integer nanoseconds
TIME_UNITS = {"ns": 1, "us": 1_000, "ms": 1_000_000, "s": 1_000_000_000}


def is_classical(t: QType) -> bool:
    if isinstance(t, Prim):
        return t.kind in ("bool", "int", "double", "unit")
    if isinstance(t, ArrayT):
        return is_classical(t.elem)
    if isinstance(t, TupleT):
        return all(is_classical(e) for e in t.elems)
    return False


def contains_kind(t: QType, kind: str) -> bool:
    if isinstance(t, Prim):
        return t.kind == kind
    if isinstance(t, ArrayT):
        return contains_kind(t.elem, kind)
    if isinstance(t, TupleT):
        return any(contains_kind(e, kind) for e in t.elems)
    if isinstance(t, OpT):
        return any(contains_kind(p, kind) for p in t.params) or contains_kind(t.ret, kind)
    return False


def type_text(t: QType) -> str:
    """Canonical descriptor text (no whitespace)."""
    return repr(t)


def parse_type_text(text: str) -> QType:
    """Inverse of type_text for descriptor types (no op types)."""
    pos = 0

    def peek() -> str:
        return text[pos] if pos < len(text) else ""

    def parse() -> QType:
        nonlocal pos
        if peek() == "(":
            pos += 1
            elems = [parse()]
            while peek() == ",":
                pos += 1
                elems.append(parse())
            if peek() != ")":
                raise ParseError(f"bad type descriptor {text!r}: expected ')'")
            pos += 1
            t: QType = TupleT(tuple(elems))
        else:
            start = pos
            while pos < len(text) and text[pos].isalpha():
                pos += 1
            name = text[start:pos]
            if name not in PRIMS:
                raise ParseError(f"bad type descriptor {text!r}: unknown type {name!r}")
            t = PRIMS[name]
        while text.startswith("[]", pos):
            pos += 2
            t = ArrayT(t)
        return t

    t = parse()
    if pos != len(text):
        raise ParseError(f"bad type descriptor {text!r}: trailing input")
    return t
