import pytest

from qgrt.errors import (AmbiguousName, ArityError, LexError, ParseError, QTypeError,
                         TimingOnClassical, UnresolvedImport)
from qgrt.frontend import parse_source, resolve_imports
from qgrt.frontend import ast
from qgrt.frontend.typecheck import typecheck

HEADER = "import config.json.*;\nimport operations.*;\n\n"


def check_src(src, kernels, platform):
    unit = parse_source(HEADER + src, "<test>")
    linked = resolve_imports([unit], [kernels])
    return typecheck(linked, platform), unit


def test_measure_as_condition_is_bool(kernels, platform):
    check_src("""
operation f(): unit {
    using (q: qubit) {
        init(q);
        while (!measure(q)) { init(q); H(q); }
    }
}
""", kernels, platform)


def test_int_from_bool_rejected(kernels, platform):
    with pytest.raises(QTypeError):
        check_src("operation f(): int { int x = true; return x; }", kernels, platform)


def test_timing_comparand_must_be_timer(kernels, platform):
    with pytest.raises((TimingOnClassical, QTypeError)):
        check_src("""
operation f(q0: qubit): unit {
    int i = 3;
    X(q0, PI) @{i == 3};
}
""", kernels, platform)


def test_timing_on_classical_call_rejected(kernels, platform):
    with pytest.raises(TimingOnClassical):
        check_src("""
operation classical(): unit {}
operation f(): unit {
    timer t;
    classical() @{t == 1ns};
}
""", kernels, platform)


def test_timing_on_quantum_composed_op_allowed(kernels, platform):
    check_src("""
operation flip(q: qubit): unit { X(q, PI); }
operation f(): unit {
    using (q: qubit) {
        timer t;
        init(q) !{t};
        flip(q) @{t >= 300ns};
    }
}
""", kernels, platform)


def test_qubit_scope_ends_with_using(kernels, platform):
    with pytest.raises(QTypeError):
        check_src("""
operation f(): unit {
    using (q: qubit) { init(q); }
    H(q);
}
""", kernels, platform)


def test_concurrent_qubits_checked_against_platform(kernels, platform):
    decls = ", ".join(f"q{i}: qubit" for i in range(8))  # platform has 7
    with pytest.raises(QTypeError):
        check_src(f"operation f(): unit {{ using ({decls}) {{}} }}", kernels, platform)


def test_arity_error(kernels, platform):
    with pytest.raises(ArityError):
        check_src("operation f(q0: qubit): unit { H(q0, q0); }", kernels, platform)


def test_array_homogeneity(kernels, platform):
    with pytest.raises(QTypeError):
        check_src("operation f(): unit { int[] a = {1, true}; }", kernels, platform)


def test_jagged_arrays_accepted(kernels, platform):
    check_src("""
operation f(): int[][] {
    int[][] a = {{1}, {2, 3}};
    return a;
}
""", kernels, platform)


def test_typing_totality_on_fixture(kernels, platform):
    unit = parse_source((kernels / "kernel.qu").read_text(), "kernel.qu")
    linked = resolve_imports([unit], [kernels])
    typecheck(linked, platform)
    exprs = [n for n in ast.walk(unit) if isinstance(n, ast.Expr)
             and not isinstance(n, ast.Modifier)]
    assert exprs and all(e.qtype is not None for e in exprs)


def test_operation_used_as_value_rejected(kernels, platform):
    with pytest.raises(QTypeError):
        check_src("operation f(): int { int x = f; return x; }", kernels, platform)


def test_modifier_requires_unitary_semantics(kernels, platform):
    with pytest.raises(QTypeError):
        check_src("""
operation f(): unit {
    using (a: qubit, b: qubit) { control(a, measure)(b); }
}
""", kernels, platform)


def test_duration_requires_opaque(kernels, platform):
    with pytest.raises(QTypeError):
        check_src("""
operation g(): unit {}
operation f(): time { return duration(g); }
""", kernels, platform)


def test_opaque_must_match_config(kernels, platform):
    unit = parse_source(HEADER + "opaque mystery(q: qubit): unit;", "<test>")
    linked = resolve_imports([unit], [kernels])
    with pytest.raises(QTypeError):
        typecheck(linked, platform)


# -- rejection soundness: one fixture per frontend error class ------------------

REJECTS = [
    (LexError, "operation f(): unit { time t = 5qs; }"),
    (ParseError, "operation f() {}"),
    (UnresolvedImport, "import ghost.*;\noperation f(): unit {}"),
    (QTypeError, "operation f(): int { return true; }"),
    (TimingOnClassical,
     "operation c(): unit {}\noperation f(): unit { timer t; c() @{t == 1ns}; }"),
    (ArityError, "operation g(a: int): unit {}\noperation f(): unit { g(); }"),
]


@pytest.mark.parametrize("err,src", REJECTS, ids=[e.__name__ for e, _ in REJECTS])
def test_rejection_soundness(err, src, kernels, platform):
    with pytest.raises(err):
        unit = parse_source(src, "<neg>")
        linked = resolve_imports([unit], [kernels])
        typecheck(linked, platform)
