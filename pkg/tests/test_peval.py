import pytest

from qgrt.errors import DivisionByZero, StepBudgetExceeded, Unsupported
from qgrt.ir import (Alloc, Call, Compute, CondBr, Const, Free, Jump, Measure, QOp,
                     canonical_text)
from qgrt.peval import partially_execute
from support import INLINE_HEADER


def residual_instrs(prog):
    proc = prog.entry()
    return [ins for label in proc.order for ins in proc.blocks[label].instrs]


def test_sum_random_false_fully_eliminated(rt, kernels):
    from qgrt.runtime import compile_kernel
    cr = compile_kernel(kernels / "kernel.qu", "sum_random", [[2, 6, 8], False], rt())
    instrs = residual_instrs(cr.residual_ir)
    assert instrs == []
    proc = cr.residual_ir.entry()
    assert len(proc.order) == 1
    ret = proc.blocks[proc.entry].term
    assert [i.value for i in ret.value.items] == [16, 0]


def test_sum_random_true_residual_shape(rt, kernels):
    from qgrt.runtime import compile_kernel
    cr = compile_kernel(kernels / "kernel.qu", "sum_random", [[2, 6, 8], True], rt())
    instrs = residual_instrs(cr.residual_ir)
    kinds = [type(i).__name__ for i in instrs]
    assert kinds.count("Alloc") == 1 and kinds.count("Free") == 2  # freed on both arms
    assert [i.name for i in instrs if isinstance(i, QOp)] == ["init", "H"]
    assert kinds.count("Measure") == 1
    branches = [b.term for b in cr.residual_ir.entry().blocks.values()
                if isinstance(b.term, CondBr)]
    assert len(branches) == 1
    rets = [b.term.value for b in cr.residual_ir.entry().blocks.values()
            if type(b.term).__name__ == "Ret"]
    selected = sorted(r.items[1].value for r in rets)
    assert selected == [2, 6]


def test_constant_branch_selects_single_gate(compile_src):
    for flag, want in ((True, "X"), (False, "Y")):
        cr = compile_src(INLINE_HEADER + """
operation pick(x: bool): unit {
    using (q: qubit) {
        init(q);
        if (x) { X(q, PI); } else { Y(q, PI); }
    }
}
""", "pick", [flag])
        gates = [i.name for i in residual_instrs(cr.residual_ir)
                 if isinstance(i, QOp) and i.name in ("X", "Y")]
        assert gates == [want]


def test_idempotence(rt, kernels, platform):
    from qgrt.runtime import compile_kernel
    for args in ([[2, 6, 8], False], [[2, 6, 8], True]):
        cr = compile_kernel(kernels / "kernel.qu", "sum_random", args, rt())
        once = cr.residual_ir
        twice = partially_execute(once, platform)
        assert canonical_text(once) == canonical_text(twice)


def test_residue_purity(rt, kernels):
    from qgrt.runtime import compile_kernel
    for kernel, op, args in [
        ("kernel.qu", "sum_random", [[2, 6, 8], True]),
        ("ipe.qu", "ipe", [3]),
        ("rus.qu", "prepare_until_one", []),
        ("padded.qu", "padded", []),
    ]:
        cr = compile_kernel(kernels / kernel, op, args, rt())
        proc = cr.residual_ir.entry()
        for block in proc.blocks.values():
            for ins in block.instrs:
                if isinstance(ins, Compute) and ins.op != "copy":
                    # copies are register materializations for residual loops
                    assert any(not isinstance(a, Const) for a in ins.args), ins
                assert not isinstance(ins, Call)
            if isinstance(block.term, CondBr):
                assert not (isinstance(block.term.lhs, Const)
                            and isinstance(block.term.rhs, Const))


def test_recursion_folds_to_constant(compile_src):
    cr = compile_src("""
operation fact(n: int): int {
    if (n <= 1) { return 1; }
    return n * fact(n - 1);
}
""", "fact", [5])
    proc = cr.residual_ir.entry()
    assert residual_instrs(cr.residual_ir) == []
    assert proc.blocks[proc.entry].term.value.value == 120


def test_unbounded_recursion_hits_step_budget(compile_src):
    with pytest.raises(StepBudgetExceeded):
        compile_src("""
operation loop(n: int): int {
    return loop(n + 1);
}
""", "loop", [0], step_budget=5000)


def test_compile_time_division_by_zero(compile_src):
    with pytest.raises(DivisionByZero):
        compile_src("""
operation f(d: int): int {
    int x = 10;
    return x / d;
}
""", "f", [0])


def test_branch_fork_keeps_indices_constant(compile_src):
    # forking the continuation of a dynamic branch specializes both index values
    cr = compile_src(INLINE_HEADER + """
operation f(): int {
    int[] a = {10, 20};
    int i = 0;
    using (q: qubit) {
        init(q);
        if (measure(q)) { i = 1; }
    }
    return a[i];
}
""", "f", [])
    rets = sorted(b.term.value.value for b in cr.residual_ir.entry().blocks.values()
                  if type(b.term).__name__ == "Ret")
    assert rets == [10, 20]


def test_dynamic_array_index_unsupported(compile_src):
    # the index is derived from a register-resident loop counter
    with pytest.raises(Unsupported):
        compile_src(INLINE_HEADER + """
operation f(): int {
    int[] a = {1, 2, 3, 4};
    int i = 0;
    int s = 0;
    using (q: qubit) {
        init(q);
        H(q);
        while (!measure(q)) {
            i = i + 1;
            s = a[i];
            init(q);
            H(q);
        }
    }
    return s;
}
""", "f", [])


def test_dynamic_quantum_parameter_unsupported(compile_src):
    with pytest.raises(Unsupported):
        compile_src(INLINE_HEADER + """
operation f(): unit {
    double a = 0.0;
    using (q: qubit) {
        init(q);
        while (!measure(q)) { a = a + 0.5; init(q); H(q); }
        Rz(q, a);
    }
}
""", "f", [])


def test_nested_using_reuses_lowest_free_index(compile_src):
    cr = compile_src(INLINE_HEADER + """
operation f(): unit {
    using (a: qubit) {
        init(a);
        using (b: qubit) { init(b); }
    }
    using (c: qubit) { init(c); }
}
""", "f", [])
    allocs = [i.indices for i in residual_instrs(cr.residual_ir) if isinstance(i, Alloc)]
    assert allocs == [[0], [1], [0]]
    assert cr.residual_ir.qubit_count == 2


def test_procedure_cloning_specializes_constant_arguments(compile_src):
    cr = compile_src(INLINE_HEADER + """
operation rot(q: qubit, k: int): unit {
    if (k == 1) { X(q, PI); } else { Y(q, PI); }
}
operation f(): unit {
    using (q: qubit) {
        init(q);
        rot(q, 1);
        rot(q, 2);
    }
}
""", "f", [])
    gates = [i.name for i in residual_instrs(cr.residual_ir)
             if isinstance(i, QOp) and i.name in ("X", "Y")]
    assert gates == ["X", "Y"]


def test_dynamic_loop_generalizes_carried_counter(compile_src):
    cr = compile_src(INLINE_HEADER + """
operation f(): int {
    int tries = 1;
    using (q: qubit) {
        init(q);
        H(q);
        while (!measure(q)) {
            tries = tries + 1;
            init(q);
            H(q);
        }
    }
    return tries;
}
""", "f", [])
    # the counter must live in a register inside a residual loop
    adds = [i for i in residual_instrs(cr.residual_ir)
            if isinstance(i, Compute) and i.op == "add"]
    assert adds, "loop body should retain a dynamic increment"
    labels = cr.residual_ir.entry().order
    succs = [cr.residual_ir.entry().blocks[l].term for l in labels]
    assert any(isinstance(t, Jump) and labels.index(t.target) <= i
               for i, t in enumerate(succs) if isinstance(t, Jump)), "no back edge"
