import random

import pytest

from qgrt.errors import Infeasible
from qgrt.frontend.types import TIME, TIMER, UNIT
from qgrt.ir import (BasicBlock, Const, IRProgram, IRTiming, Jump, Proc, QOp, Ret,
                     QubitRef, TimerReset, TimerTok)
from qgrt.platform import Matrix, OpDef, PlatformConfig
from qgrt.runtime import compile_kernel
from qgrt.scheduler import schedule, verify_schedule

from support import make_rtcfg
from oracles import brute_force_schedule

IDENTITY = Matrix(((1 + 0j, 0j), (0j, 1 + 0j)))


def synth_program(ops):
    """Single-block program: ops are (duration, constraints, resets) with timer
    names as strings; timers reset by an explicit leading reset instruction."""
    config_ops = {}
    toks = {}
    instrs = []
    timers = sorted({t for _, cons, rsts in ops for t in
                     [c[0] for c in cons] + list(rsts)})
    for t in timers:
        toks[t] = TimerTok(t)
    if timers:
        instrs.append(TimerReset([Const(toks[t], TIMER) for t in timers]))
    for i, (dur, cons, rsts) in enumerate(ops):
        name = f"g{i}"
        config_ops[name] = OpDef(name, dur, 1, (), IDENTITY)
        timing = None
        if cons or rsts:
            timing = IRTiming(
                tuple((Const(toks[t], TIMER), cmp, Const(v, TIME)) for t, cmp, v in cons),
                tuple(Const(toks[t], TIMER) for t in rsts))
        instrs.append(QOp(name, (), [Const(QubitRef(0), None)], [], timing))
    proc = Proc("main", [], UNIT, "b0")
    block = BasicBlock("b0", instrs, Ret(None))
    proc.blocks["b0"] = block
    proc.order = ["b0"]
    prog = IRProgram({"main": proc}, "main", UNIT, qubit_count=1)
    config = PlatformConfig("cfg", 1, 1, config_ops)
    return prog, config


def oracle_ops(ops):
    """The same system for the exhaustive search: an explicit zero-duration
    reset op stands in for the leading reset instruction."""
    timers = sorted({t for _, cons, rsts in ops for t in
                     [c[0] for c in cons] + list(rsts)})
    out = []
    if timers:
        out.append((0, [], list(timers)))
    for dur, cons, rsts in ops:
        out.append((dur, cons, list(rsts)))
    return out


def run_sched(ops):
    prog, config = synth_program(ops)
    timed = schedule(prog, config)
    starts = timed.blocks["b0"].starts
    return timed, starts


def test_back_to_back_asap():
    _, starts = run_sched([(20, [], []), (40, [], [])])
    assert starts == [0, 20]


def test_equality_pins_start():
    _, starts = run_sched([(20, [], ["t"]), (20, [("t", "==", 100)], [])])
    assert starts[1:] == [0, 100]


def test_strict_and_loose_lower_bounds():
    _, starts = run_sched([(10, [], ["t"]), (5, [("t", ">", 10)], []),
                           (5, [("t", ">=", 30)], [])])
    assert starts[1:] == [0, 11, 30]


def test_unsatisfiable_equality_is_infeasible():
    with pytest.raises(Infeasible):
        run_sched([(50, [], ["t"]), (5, [("t", "==", 10)], [])])


def test_conflicting_equalities_report():
    with pytest.raises(Infeasible) as exc:
        run_sched([(1, [], ["t"]),
                   (1, [("t", "==", 10)], []),
                   (1, [("t", "==", 5)], [])])
    assert "constraint" in str(exc.value)


def test_equality_can_delay_earlier_ops():
    # the reset of t1 must slide right so the pinned equality after a pinned
    # entry-timer constraint stays reachable
    timed, starts = run_sched([
        (1, [], ["t1"]),
        (1, [("t2", "==", 10)], []),
        (1, [("t1", "==", 5)], []),
    ])
    assert starts[1:] == [6, 10, 11]
    assert verify_schedule(timed) == []


def test_verify_passes_on_fixture_schedules(kernels):
    for kernel, op, args in [
        ("t2.qu", "t2", [True]), ("t2.qu", "t2", [False]),
        ("padded.qu", "padded", []), ("rus.qu", "prepare_until_one", []),
        ("ipe.qu", "ipe", [3]), ("kernel.qu", "sum_random", [[2, 6, 8], True]),
    ]:
        cr = compile_kernel(kernels / kernel, op, args, make_rtcfg())
        assert verify_schedule(cr.timed) == [], (kernel, args)


def test_verify_flags_shifted_equality():
    timed, _ = run_sched([(20, [], ["t"]), (20, [("t", "==", 100)], [])])
    timed.blocks["b0"].starts[2] += 1
    violations = verify_schedule(timed)
    assert violations and "==" in " ".join(violations) or "101" in " ".join(violations)


def test_verify_flags_qubit_overlap():
    timed, _ = run_sched([(20, [], []), (20, [], [])])
    timed.blocks["b0"].starts[1] = 10  # overlaps op 0 on the same qubit
    violations = verify_schedule(timed)
    assert any("before previous" in v or "busy" in v for v in violations)


def test_t2_hand_schedule(kernels):
    cr = compile_kernel(kernels / "t2.qu", "t2", [True], make_rtcfg())
    timed = cr.timed
    assert verify_schedule(timed) == []
    (label,) = timed.order
    plans = timed.model.plans[label]
    starts = timed.blocks[label].starts
    qline = {i: p.lines[0] for i, p in enumerate(plans) if p.is_quantum}
    q_starts = [(starts[i], qline[i]) for i in sorted(qline)]
    # first repetition: init, X90, X180 at +100 from X90, X90 at +200, measure
    # exactly when the second X90 ends
    assert q_starts[0][1].startswith("init")
    x90_1 = q_starts[1][0]
    assert q_starts[2][0] == x90_1 + 100
    assert q_starts[3][0] == x90_1 + 200
    assert q_starts[4][0] == q_starts[3][0] + 20
    assert q_starts[4][1].startswith("measure")


def random_system(rng: random.Random):
    # durations and constraint values are bounded so a feasible system always
    # has its lexicographic minimum inside the oracle's 64-cycle horizon:
    # each start exceeds its predecessor by at most dur + value + 1 <= 12
    timers = ["t1", "t2"]
    n = rng.randint(2, 5)
    ops = []
    for _ in range(n):
        dur = rng.randint(1, 3)
        cons = []
        if rng.random() < 0.6:
            cons.append((rng.choice(timers), rng.choice(["==", ">", ">="]),
                         rng.randint(0, 8)))
        rsts = [t for t in timers if rng.random() < 0.3]
        ops.append((dur, cons, rsts))
    return ops, timers


def test_oracle_equivalence_sample():
    rng = random.Random(1234)
    agree = 0
    for _ in range(60):
        ops, _ = random_system(rng)
        want = brute_force_schedule(oracle_ops(ops), horizon=64)
        try:
            timed, starts = run_sched(ops)
            got = starts
        except Infeasible:
            got = None
        if want is None:
            assert got is None, (ops, got)
        else:
            assert got == want, (ops, got, want)
            assert verify_schedule(timed) == []
        agree += 1
    assert agree == 60
