"""Binary data-exchange protocol between the kernel and the host.

Little-endian throughout. bool is one byte (1/0); int is 4 bytes two's
complement; double is IEEE-754 binary64 (an f32 mode serializes 4-byte floats
instead, for strict compatibility with older tooling); unit is empty; tuples
concatenate their element encodings; an array field is a 4-byte offset from
the field's own address to its storing region, which holds a 4-byte element
count followed by the element encodings. Regions are appended depth-first
after the enclosing fixed part, so a serialized block can be copied to any
address and still decode.
"""
from __future__ import annotations

import struct

from .errors import DecodeBadOffset, DecodeTruncated, EncodeTypeMismatch
from .frontend.types import (ArrayT, BOOL, DOUBLE, INT, Prim, QType, TupleT, UNIT,
                             parse_type_text, type_text)

INT32_MIN = -(2 ** 31)
INT32_MAX = 2 ** 31 - 1


def _fixed_size(desc: QType, f32: bool) -> int:
    if isinstance(desc, Prim):
        return {"bool": 1, "int": 4, "double": 4 if f32 else 8, "unit": 0}[desc.kind]
    if isinstance(desc, ArrayT):
        return 4
    if isinstance(desc, TupleT):
        return sum(_fixed_size(e, f32) for e in desc.elems)
    raise EncodeTypeMismatch(f"{type_text(desc)} does not cross the host boundary")


def encode_value(value, desc: QType, f32_doubles: bool = False) -> bytes:
    buf = bytearray()
    _encode_block([(desc, value)], buf, f32_doubles)
    return bytes(buf)


def _encode_block(fields: list, buf: bytearray, f32: bool) -> None:
    base = len(buf)
    arrays = []
    flat = []

    def flatten(desc, value):
        if isinstance(desc, TupleT):
            if not isinstance(value, (tuple, list)) or len(value) != len(desc.elems):
                raise EncodeTypeMismatch(
                    f"value {value!r} does not match {type_text(desc)}")
            for d, v in zip(desc.elems, value):
                flatten(d, v)
        else:
            flat.append((desc, value))

    for desc, value in fields:
        flatten(desc, value)

    for desc, value in flat:
        if isinstance(desc, ArrayT):
            if not isinstance(value, (list, tuple)):
                raise EncodeTypeMismatch(f"value {value!r} is not an array")
            arrays.append((len(buf), desc.elem, list(value)))
            buf.extend(b"\x00\x00\x00\x00")  # offset patched below
        elif desc == BOOL:
            if isinstance(value, bool) or value in (0, 1):
                buf.append(1 if value else 0)
            else:
                raise EncodeTypeMismatch(f"value {value!r} is not a bool")
        elif desc == INT:
            if not isinstance(value, int) or isinstance(value, bool):
                raise EncodeTypeMismatch(f"value {value!r} is not an int")
            if not INT32_MIN <= value <= INT32_MAX:
                raise EncodeTypeMismatch(f"{value} does not fit in 32 bits")
            buf.extend(struct.pack("<i", value))
        elif desc == DOUBLE:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise EncodeTypeMismatch(f"value {value!r} is not a double")
            buf.extend(struct.pack("<f" if f32 else "<d", float(value)))
        elif desc == UNIT:
            pass
        else:
            raise EncodeTypeMismatch(f"cannot encode {type_text(desc)}")

    for field_addr, elem_t, items in arrays:
        region = len(buf)
        struct.pack_into("<i", buf, field_addr, region - field_addr)
        buf.extend(struct.pack("<i", len(items)))
        _encode_block([(elem_t, v) for v in items], buf, f32)


def decode_value(data: bytes, desc: QType, f32_doubles: bool = False):
    value, _ = decode_with_extent(data, desc, f32_doubles)
    return value


def decode_with_extent(data: bytes, desc: QType, f32_doubles: bool = False):
    """Decode and also report how many leading bytes the value occupies."""
    extent = [_fixed_size(desc, f32_doubles)]
    value = _decode(data, 0, desc, f32_doubles, extent)
    return value, extent[0]


def _decode(data: bytes, addr: int, desc: QType, f32: bool, extent: list):
    size = _fixed_size(desc, f32)
    if addr + size > len(data):
        raise DecodeTruncated(
            f"need {size} byte(s) at {addr} for {type_text(desc)}, "
            f"buffer has {len(data)}")
    extent[0] = max(extent[0], addr + size)
    if isinstance(desc, TupleT):
        out = []
        pos = addr
        for e in desc.elems:
            out.append(_decode(data, pos, e, f32, extent))
            pos += _fixed_size(e, f32)
        return tuple(out)
    if isinstance(desc, ArrayT):
        (offset,) = struct.unpack_from("<i", data, addr)
        region = addr + offset
        if offset < 0 or region + 4 > len(data):
            raise DecodeBadOffset(f"array offset {offset} at {addr} escapes the buffer")
        (count,) = struct.unpack_from("<i", data, region)
        if count < 0:
            raise DecodeBadOffset(f"negative element count {count} at {region}")
        elem_size = _fixed_size(desc.elem, f32)
        if region + 4 + count * elem_size > len(data):
            raise DecodeTruncated(
                f"array of {count} x {type_text(desc.elem)} at {region} is truncated")
        extent[0] = max(extent[0], region + 4 + count * elem_size)
        return [_decode(data, region + 4 + i * elem_size, desc.elem, f32, extent)
                for i in range(count)]
    if desc == BOOL:
        return data[addr] != 0
    if desc == INT:
        return struct.unpack_from("<i", data, addr)[0]
    if desc == DOUBLE:
        return struct.unpack_from("<f" if f32 else "<d", data, addr)[0]
    if desc == UNIT:
        return None
    raise DecodeBadOffset(f"cannot decode {type_text(desc)}")


__all__ = ["encode_value", "decode_value", "decode_with_extent",
           "parse_type_text", "type_text"]
