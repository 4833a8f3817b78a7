"""Client-side decoder for result blocks.

Implements the exchange format independently of the runtime so the two ends
of the protocol check each other: little-endian scalars (bool 1 byte, int 4,
double 8), tuples concatenated, arrays as a 4-byte offset from the field's
own address to a region of [count][elements].
"""
from __future__ import annotations

import struct


def parse_descriptor(text: str):
    """Descriptor text -> nested ('prim'|'array'|'tuple', ...) shape."""
    pos = 0

    def parse():
        nonlocal pos
        if pos < len(text) and text[pos] == "(":
            pos += 1
            elems = [parse()]
            while pos < len(text) and text[pos] == ",":
                pos += 1
                elems.append(parse())
            if pos >= len(text) or text[pos] != ")":
                raise ValueError(f"bad descriptor {text!r}")
            pos += 1
            shape = ("tuple", tuple(elems))
        else:
            start = pos
            while pos < len(text) and text[pos].isalpha():
                pos += 1
            name = text[start:pos]
            if name not in ("bool", "int", "double", "unit"):
                raise ValueError(f"bad descriptor {text!r}: unknown type {name!r}")
            shape = ("prim", name)
        while text.startswith("[]", pos):
            pos += 2
            shape = ("array", shape)
        return shape

    shape = parse()
    if pos != len(text):
        raise ValueError(f"bad descriptor {text!r}: trailing input")
    return shape


_PRIM_SIZE = {"bool": 1, "int": 4, "double": 8, "unit": 0}


def _fixed_size(shape) -> int:
    kind = shape[0]
    if kind == "prim":
        return _PRIM_SIZE[shape[1]]
    if kind == "array":
        return 4
    return sum(_fixed_size(e) for e in shape[1])


def decode(data: bytes, shape, addr: int = 0):
    kind = shape[0]
    if kind == "tuple":
        out = []
        pos = addr
        for e in shape[1]:
            out.append(decode(data, e, pos))
            pos += _fixed_size(e)
        return tuple(out)
    if kind == "array":
        (offset,) = struct.unpack_from("<i", data, addr)
        region = addr + offset
        (count,) = struct.unpack_from("<i", data, region)
        elem = shape[1]
        size = _fixed_size(elem)
        return [decode(data, elem, region + 4 + i * size) for i in range(count)]
    name = shape[1]
    if name == "bool":
        return data[addr] != 0
    if name == "int":
        return struct.unpack_from("<i", data, addr)[0]
    if name == "double":
        return struct.unpack_from("<d", data, addr)[0]
    return None  # unit
