from pathlib import Path

import pytest

from qgrt.errors import ParseError
from qgrt.frontend import ast, parse_source, pretty


def test_ipe_kernel_shape(kernels):
    unit = parse_source((kernels / "ipe.qu").read_text(), "ipe.qu")
    ops = [d for d in unit.decls if isinstance(d, ast.OperationDecl)]
    assert [o.name for o in ops] == ["ipe"]
    usings = [n for n in ast.walk(ops[0]) if isinstance(n, ast.Using)]
    assert len(usings) == 1
    assert [b.name for b in usings[0].bindings] == ["anc", "eig"]


def test_empty_operation_accepted():
    unit = parse_source("operation f(): unit {}")
    (decl,) = unit.decls
    assert isinstance(decl, ast.OperationDecl) and decl.body.stmts == []


def test_missing_return_type_rejected():
    with pytest.raises(ParseError):
        parse_source("operation f() {}")


def test_timing_annotation_parse():
    unit = parse_source(
        "operation f(q: qubit): unit { X(q, PI) @{t == 10ns && u >= 5ns} !{t, u}; }")
    stmt = unit.decls[0].body.stmts[0]
    assert isinstance(stmt, ast.ExprStmt)
    assert [(c.timer, c.cmp) for c in stmt.timing.constraints] == [("t", "=="), ("u", ">=")]
    assert stmt.timing.resets == ["t", "u"]


def test_less_than_comparator_rejected_in_constraints():
    # '<' cannot lower-bound a start time, so the grammar refuses it
    with pytest.raises(ParseError):
        parse_source("operation f(q: qubit): unit { X(q, PI) @{t < 10ns}; }")


def test_timing_on_non_call_rejected():
    with pytest.raises(ParseError):
        parse_source("operation f(): int { 1 + 2 @{t == 1ns}; return 0; }")


def test_modifier_call_parse():
    unit = parse_source("operation f(a: qubit, b: qubit): unit { control(a, oracle)(b); }")
    call = unit.decls[0].body.stmts[0].expr
    assert isinstance(call.callee, ast.Modifier)
    assert call.callee.kind == "control"


def test_compound_assignment_desugars():
    unit = parse_source("operation f(): int { int x = 1; x += 2; return x; }")
    assign = unit.decls[0].body.stmts[1]
    assert isinstance(assign, ast.Assign)
    assert isinstance(assign.value, ast.BinOp) and assign.value.op == "+"


def test_precedence_is_c_style():
    unit = parse_source("operation f(): bool { return 1 + 2 * 3 == 7 && true; }")
    expr = unit.decls[0].body.stmts[0].value
    assert expr.op == "&&"
    assert expr.lhs.op == "=="


@pytest.mark.parametrize("name", [
    "kernel.qu", "ipe.qu", "t2.qu", "rus.qu", "padded.qu", "pulsedemo.qu",
    "operations.qu",
])
def test_pretty_print_round_trip(kernels, name):
    src = (kernels / name).read_text()
    unit = parse_source(src, name)
    printed = pretty(unit)
    reparsed = parse_source(printed, name)
    assert ast.structurally_equal(unit, reparsed), printed


def test_parse_error_reports_expected_token():
    with pytest.raises(ParseError) as exc:
        parse_source("operation f(): unit { if true {} }")
    assert "expected" in str(exc.value)
