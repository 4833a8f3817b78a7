import pytest

from qgrt.codegen import _RegMap, emit_result_epilogue
from qgrt.errors import (AsmSyntax, RegisterSpill, UndefinedLabel,
                         UnencodableImmediate, UnsupportedReturn)
from qgrt.frontend.types import (ArrayT, BOOL, DOUBLE, INT, TIMER, TupleT, UNIT,
                                 parse_type_text)
from qgrt.ir import Const, VArray, VTuple, Var
from qgrt.isa import assemble, disassemble
from qgrt.runtime import compile_kernel
from support import make_rtcfg

INT2 = TupleT((INT, INT))


def epilogue(ret_type, tree):
    return emit_result_epilogue(ret_type, tree, _RegMap())


def test_constant_pair_epilogue():
    lines = epilogue(INT2, VTuple((Const(16, INT), Const(0, INT))))
    assert lines == ["ldi r30 16", "stw r30 0", "ldi r30 0", "stw r30 4", "halt"]


def test_dynamic_bool_epilogue():
    rm = _RegMap()
    lines = emit_result_epilogue(BOOL, Var("%1"), rm)
    assert lines == [f"stb {rm.reg('%1')} 0", "halt"]


def test_constant_array_epilogue_layout():
    lines = epilogue(ArrayT(INT), VArray((Const(2, INT), Const(6, INT), Const(8, INT))))
    stores = [l for l in lines if l.startswith("stw")]
    # offset word at 0, count at 4, elements at 8/12/16
    assert [int(l.split()[2]) for l in stores] == [0, 4, 8, 12, 16]
    values = [int(l.split()[1][1:]) for l in lines if l.startswith("ldi")]
    assert values[:2] == [30, 30]  # scratch register reused
    loaded = [int(l.split()[2]) for l in lines if l.startswith("ldi")]
    assert loaded == [4, 3, 2, 6, 8]


def test_double_epilogue_uses_word_pair():
    lines = epilogue(DOUBLE, Const(0.625, DOUBLE))
    assert lines[-2].startswith("std r30 r31 0")
    assert lines[-1] == "halt"


def test_unit_epilogue_is_just_halt():
    assert epilogue(UNIT, None) == ["halt"]


def test_dynamic_double_return_unsupported():
    with pytest.raises(UnsupportedReturn):
        epilogue(DOUBLE, Var("%1"))


def test_timer_return_unsupported():
    with pytest.raises(UnsupportedReturn):
        epilogue(TIMER, Const(None, TIMER))


def test_fixture_assemblies_assemble_and_round_trip(kernels):
    for kernel, op, args in [
        ("kernel.qu", "sum_random", [[2, 6, 8], False]),
        ("kernel.qu", "sum_random", [[2, 6, 8], True]),
        ("ipe.qu", "ipe", [3]),
        ("t2.qu", "t2", [True]),
        ("rus.qu", "prepare_until_one", []),
        ("padded.qu", "padded", []),
        ("pulsedemo.qu", "pulses", []),
    ]:
        cr = compile_kernel(kernels / kernel, op, args, make_rtcfg())
        prog = assemble(cr.asm_text)
        second = assemble(disassemble(prog))
        assert [i.render() for i in prog.instrs] == [i.render() for i in second.instrs]
        assert prog.labels == second.labels
        assert prog.qubit_count == second.qubit_count
        assert prog.rettype_text == second.rettype_text


def test_undefined_label():
    with pytest.raises(UndefinedLabel):
        assemble(".qubits 0\nstart:\n    br eq nowhere\n    halt\n")


def test_bad_mnemonic_and_operands():
    with pytest.raises(AsmSyntax):
        assemble("    frobnicate r1\n")
    with pytest.raises(AsmSyntax):
        assemble("    add r1 r2\n")
    with pytest.raises(AsmSyntax):
        assemble("    ldi r99 1\n")


def test_unencodable_immediate():
    with pytest.raises(UnencodableImmediate):
        assemble(f"    ldi r1 {2**31}\n")


def test_comments_respect_quoted_pulse_text():
    prog = assemble('    pulse 40 "shape # not a comment" q0  # trailing\n    halt\n')
    assert prog.instrs[0].text == "shape # not a comment"


def test_rettype_header_parses_back(kernels):
    cr = compile_kernel(kernels / "kernel.qu", "sum_random", [[2, 6, 8], False],
                        make_rtcfg())
    prog = assemble(cr.asm_text)
    assert parse_type_text(prog.rettype_text) == INT2


def test_register_spill_reported(compile_src):
    # more live measurement results than allocatable registers
    from support import INLINE_HEADER
    n = 40
    body = "\n".join(
        f"    bool b{i} = measure(q); init(q); H(q);" for i in range(n))
    ands = " && ".join(f"b{i}" for i in range(n))
    src = INLINE_HEADER + f"""
operation f(): bool {{
    bool acc = false;
    using (q: qubit) {{
        init(q);
        H(q);
{body}
        acc = {ands};
    }}
    return acc;
}}
"""
    with pytest.raises(RegisterSpill):
        compile_src(src, "f", [])
