"""Source printer: parse(pretty(unit)) is structurally identical to unit."""
from __future__ import annotations

from . import ast
from .types import QType, type_text

_PREC = {
    "||": 1, "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}
_UNARY_PREC = 7


def print_type(t: QType) -> str:
    return type_text(t).replace(",", ", ")


def print_expr(e: ast.Expr, parent_prec: int = 0) -> str:
    if isinstance(e, ast.IntLit):
        return str(e.value)
    if isinstance(e, ast.DoubleLit):
        return format_double(e.value)
    if isinstance(e, ast.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, ast.TimeLit):
        mag = e.magnitude
        text = str(int(mag)) if mag == int(mag) else format_double(mag)
        return f"{text}{e.unit}"
    if isinstance(e, ast.Ident):
        return e.name
    if isinstance(e, ast.BinOp):
        prec = _PREC[e.op]
        s = f"{print_expr(e.lhs, prec)} {e.op} {print_expr(e.rhs, prec + 1)}"
        return f"({s})" if prec < parent_prec else s
    if isinstance(e, ast.UnOp):
        s = f"{e.op}{print_expr(e.operand, _UNARY_PREC)}"
        return f"({s})" if _UNARY_PREC < parent_prec else s
    if isinstance(e, ast.Call):
        return f"{print_expr(e.callee, _UNARY_PREC + 1)}({', '.join(print_expr(a) for a in e.args)})"
    if isinstance(e, ast.Modifier):
        return f"{e.kind}({', '.join(print_expr(a) for a in e.args)})"
    if isinstance(e, ast.Index):
        return f"{print_expr(e.array, _UNARY_PREC + 1)}[{print_expr(e.index)}]"
    if isinstance(e, ast.Length):
        return f"{print_expr(e.array, _UNARY_PREC + 1)}.length"
    if isinstance(e, ast.TupleExpr):
        return "(" + ", ".join(print_expr(i) for i in e.items) + ")"
    if isinstance(e, ast.ArrayLit):
        return "{" + ", ".join(print_expr(i) for i in e.items) + "}"
    if isinstance(e, ast.DurationOf):
        return f"duration({e.opname})"
    raise AssertionError(f"unprintable expression {e!r}")


def format_double(v: float) -> str:
    text = repr(v)
    if "." not in text and "e" not in text and "E" not in text:
        text += ".0"
    return text


def _print_timing(t: ast.TimingAnnotation | None) -> str:
    if t is None:
        return ""
    parts = []
    if t.constraints:
        body = " && ".join(f"{c.timer} {c.cmp} {print_expr(c.time_expr)}" for c in t.constraints)
        parts.append(f" @{{{body}}}")
    if t.resets:
        parts.append(" !{" + ", ".join(t.resets) + "}")
    return "".join(parts)


def _print_stmt(s: ast.Stmt, ind: str, out: list[str]) -> None:
    if isinstance(s, ast.VarDecl):
        decls = ", ".join(
            d.name if d.init is None else f"{d.name} = {print_expr(d.init)}"
            for d in s.declarators)
        out.append(f"{ind}{print_type(s.decl_type)} {decls};")
    elif isinstance(s, ast.Assign):
        out.append(f"{ind}{print_expr(s.target)} = {print_expr(s.value)};")
    elif isinstance(s, ast.If):
        out.append(f"{ind}if ({print_expr(s.cond)}) {{")
        _print_block_stmts(s.then, ind, out)
        if s.els is not None:
            out.append(f"{ind}}} else {{")
            _print_block_stmts(s.els, ind, out)
        out.append(f"{ind}}}")
    elif isinstance(s, ast.While):
        out.append(f"{ind}while ({print_expr(s.cond)}) {{")
        _print_block_stmts(s.body, ind, out)
        out.append(f"{ind}}}")
    elif isinstance(s, ast.Break):
        out.append(f"{ind}break;")
    elif isinstance(s, ast.Continue):
        out.append(f"{ind}continue;")
    elif isinstance(s, ast.Return):
        out.append(f"{ind}return;" if s.value is None else f"{ind}return {print_expr(s.value)};")
    elif isinstance(s, ast.Using):
        binds = ", ".join(f"{b.name}: qubit" for b in s.bindings)
        out.append(f"{ind}using ({binds}) {{")
        _print_block_stmts(s.body, ind, out)
        out.append(f"{ind}}}")
    elif isinstance(s, ast.ExprStmt):
        out.append(f"{ind}{print_expr(s.expr)}{_print_timing(s.timing)};")
    else:
        raise AssertionError(f"unprintable statement {s!r}")


def _print_block_stmts(b: ast.Block, ind: str, out: list[str]) -> None:
    for s in b.stmts:
        _print_stmt(s, ind + "    ", out)


def pretty(unit: ast.SourceUnit) -> str:
    out: list[str] = []
    if unit.explicit_package:
        out.append(f"package {unit.package};")
        out.append("")
    for imp in unit.imports:
        out.append(f"import {imp.path}{'.*' if imp.wildcard else ''};")
    if unit.imports:
        out.append("")
    for d in unit.decls:
        params = ", ".join(f"{p.name}: {print_type(p.qtype)}" for p in d.params)
        if isinstance(d, ast.OpaqueDecl):
            out.append(f"opaque {d.name}({params}): {print_type(d.ret)};")
        else:
            out.append(f"operation {d.name}({params}): {print_type(d.ret)} {{")
            _print_block_stmts(d.body, "", out)
            out.append("}")
            out.append("")
    return "\n".join(out).rstrip() + "\n"
