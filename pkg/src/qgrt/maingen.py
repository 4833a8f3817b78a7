"""Zero-parameter `main` generation from kernel interface arguments.

Host values arrive as JSON-shaped data and are converted against the callee's
declared parameter types; conversion failures raise ArgTypeError before any
compilation happens. Scalar-only argument lists are inlined into the call,
otherwise each argument becomes a `var<i>_<kind>` declaration.
"""
from __future__ import annotations

from .errors import ArgTypeError
from .frontend import ast
from .frontend.pretty import format_double, print_type
from .frontend.types import (ArrayT, BOOL, DOUBLE, INT, QType, TupleT,
                             is_classical, type_text)

INT32_MIN = -(2 ** 31)
INT32_MAX = 2 ** 31 - 1

KernelArgs = list[tuple[QType, object]]


def convert_args(raw_args: list, params: list[tuple[str, QType]]) -> KernelArgs:
    """Convert host-provided values against the callee's parameter types."""
    if len(raw_args) != len(params):
        raise ArgTypeError(
            f"kernel takes {len(params)} argument(s), got {len(raw_args)}")
    out: KernelArgs = []
    for value, (name, qtype) in zip(raw_args, params):
        if not is_classical(qtype):
            raise ArgTypeError(
                f"parameter {name!r} has non-classical type {type_text(qtype)}; "
                "only classical values cross the host boundary")
        out.append((qtype, _convert(value, qtype, name)))
    return out


def _convert(value, qtype: QType, name: str):
    what = f"argument {name!r}"
    if qtype == BOOL:
        if isinstance(value, bool):
            return value
        raise ArgTypeError(f"{what}: expected bool, got {value!r}")
    if qtype == INT:
        if isinstance(value, int) and not isinstance(value, bool):
            if not INT32_MIN <= value <= INT32_MAX:
                raise ArgTypeError(f"{what}: {value} does not fit in 32 bits")
            return value
        raise ArgTypeError(f"{what}: expected int, got {value!r}")
    if qtype == DOUBLE:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ArgTypeError(f"{what}: expected double, got {value!r}")
    if isinstance(qtype, ArrayT):
        if not isinstance(value, (list, tuple)):
            raise ArgTypeError(f"{what}: expected a homogeneous list, got {value!r}")
        items = [_convert(v, qtype.elem, name) for v in value]
        kinds = {_shape(v) for v in value}
        if qtype.elem == DOUBLE:
            kinds = {"double" if k == "int" else k for k in kinds}
        if len(kinds) > 1:
            raise ArgTypeError(f"{what}: heterogeneous array {value!r}")
        return items
    if isinstance(qtype, TupleT):
        if not isinstance(value, (list, tuple)) or len(value) != len(qtype.elems):
            raise ArgTypeError(
                f"{what}: expected a {len(qtype.elems)}-tuple, got {value!r}")
        return tuple(_convert(v, t, name) for v, t in zip(value, qtype.elems))
    raise ArgTypeError(f"{what}: unsupported parameter type {type_text(qtype)}")


def _shape(value) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "double"
    if isinstance(value, (list, tuple)):
        return "list"
    return type(value).__name__


def _kind_suffix(qtype: QType) -> str:
    if isinstance(qtype, ArrayT):
        return "arr"
    if isinstance(qtype, TupleT):
        return "tup"
    return qtype.kind


def _literal(value, qtype: QType) -> str:
    if qtype == BOOL:
        return "true" if value else "false"
    if qtype == INT:
        return str(value)
    if qtype == DOUBLE:
        return format_double(value)
    if isinstance(qtype, ArrayT):
        return "{" + ", ".join(_literal(v, qtype.elem) for v in value) + "}"
    if isinstance(qtype, TupleT):
        return "(" + ", ".join(_literal(v, t) for v, t in zip(value, qtype.elems)) + ")"
    raise ArgTypeError(f"no literal form for {type_text(qtype)}")


def generate_main(op_name: str, args: KernelArgs, callee: ast.OperationDecl) -> str:
    """Kernel source text of a zero-parameter main calling op_name with args."""
    ret = print_type(callee.ret)
    if all(not isinstance(t, (ArrayT, TupleT)) for t, _ in args):
        call_args = ",".join(_literal(v, t) for t, v in args)
        return (f"operation main(): {ret} {{\n"
                f"    return {op_name}({call_args});\n"
                f"}}\n")
    lines = [f"operation main(): {ret} {{"]
    names = []
    for i, (t, v) in enumerate(args):
        name = f"var{i}_{_kind_suffix(t)}"
        names.append(name)
        lines.append(f"    {print_type(t)} {name} = {_literal(v, t)};")
    lines.append(f"    return {op_name}({','.join(names)});")
    lines.append("}")
    return "\n".join(lines) + "\n"
