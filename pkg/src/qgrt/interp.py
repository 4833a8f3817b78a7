"""Direct interpreter for the statement-level IR.

Runs either the unoptimized or the residual form against the state-vector
backend, ignoring timing. This is the semantics oracle: the optimizer and
the scheduler/codegen/VM route must reproduce its return value and its
measurement trace under a matched seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import QTypeError, StepBudgetExceeded, TooManyQubits, Unsupported
from .ir import (Alloc, Call, CondBr, Compute, Free, IRProgram, Jump, Kill,
                 Measure, QOp, QubitRef, Ret, SetIndex, Sync, TimerReset, Var)
from .peval import fold
from .platform import PlatformConfig, Pulse, Reset
from .qsim import QuantumState, build_unitary


@dataclass
class IrRun:
    value: object
    trace: list = field(default_factory=list)   # (qubit_index, outcome)
    qubit_count: int = 0


@dataclass
class _Frame:
    proc: str
    label: str
    idx: int
    env: dict
    dest: str | None


def run_ir(program: IRProgram, config: PlatformConfig, seed: int,
           zero_init: bool = False, step_budget: int = 10 ** 7) -> IrRun:
    state = QuantumState(seed, zero_init=zero_init)
    trace: list = []
    used: set[int] = set()
    high = 0

    stack: list[_Frame] = []
    proc = program.entry()
    if proc.params:
        raise QTypeError("entry operation must take no parameters")
    env: dict = {}
    label = proc.entry
    idx = 0
    budget = step_budget

    def ev(operand, env_):
        if isinstance(operand, Var):
            if operand.name == "__missing__":
                raise QTypeError("operation fell off the end without returning a value")
            return env_[operand.name]
        return operand.value

    def qubit_index(operand, env_) -> int:
        v = ev(operand, env_)
        if isinstance(v, QubitRef):
            return v.index
        raise AssertionError(f"expected qubit, got {v!r}")

    while True:
        block = program.procs[proc.name].blocks[label]
        if idx < len(block.instrs):
            ins = block.instrs[idx]
            idx += 1
            budget -= 1
            if budget < 0:
                raise StepBudgetExceeded("IR interpretation exceeded its step budget")
            if isinstance(ins, Compute):
                vals = [ev(a, env) for a in ins.args]
                if ins.op == "copy":
                    env[ins.dest] = vals[0]
                else:
                    env[ins.dest] = fold(ins.op, vals, ins.rtype)
            elif isinstance(ins, SetIndex):
                arr = ev(ins.array, env)
                i = ev(ins.index, env)
                if not (0 <= i < len(arr)):
                    raise Unsupported(f"array index {i} out of range")
                arr[i] = ev(ins.value, env)
            elif isinstance(ins, QOp):
                qubits = [qubit_index(q, env) for q in ins.qubits]
                for q in qubits:
                    state.ensure(q)
                    high = max(high, q + 1)
                opdef = config.operations[ins.name]
                if isinstance(opdef.semantics, Reset):
                    state.reset(qubits[0])
                elif isinstance(opdef.semantics, Pulse):
                    pass  # identity; duration is a scheduling concern
                else:
                    params = [ev(p, env) for p in ins.params]
                    state.apply(build_unitary(config, ins.name, ins.mods, params), qubits)
            elif isinstance(ins, Measure):
                q = qubit_index(ins.qubit, env)
                state.ensure(q)
                high = max(high, q + 1)
                outcome = state.measure(q)
                trace.append((q, outcome))
                if ins.dest is not None:
                    env[ins.dest] = outcome
            elif isinstance(ins, (TimerReset, Sync)):
                pass
            elif isinstance(ins, Alloc):
                if ins.indices is not None:
                    used.update(ins.indices)
                    high = max(high, max(ins.indices) + 1) if ins.indices else high
                else:
                    for name in ins.names:
                        i = 0
                        while i in used:
                            i += 1
                        if i >= config.qubit_count:
                            raise TooManyQubits(
                                f"kernel needs more than {config.qubit_count} qubit(s)")
                        used.add(i)
                        env[name] = QubitRef(i)
                        high = max(high, i + 1)
            elif isinstance(ins, Free):
                if ins.indices is not None:
                    used.difference_update(ins.indices)
                else:
                    used.difference_update(env[nm].index for nm in ins.names)
            elif isinstance(ins, Kill):
                for name in ins.names:
                    env.pop(name, None)
            elif isinstance(ins, Call):
                callee = program.procs[ins.name]
                callee_env = {p: ev(a, env) for (p, _), a in zip(callee.params, ins.args)}
                stack.append(_Frame(proc.name, block.term.target, 0, env, ins.dest))
                proc, label, idx, env = callee, callee.entry, 0, callee_env
            else:
                raise AssertionError(f"unhandled instruction {ins!r}")
            continue

        term = block.term
        budget -= 1
        if isinstance(term, Jump):
            label, idx = term.target, 0
        elif isinstance(term, CondBr):
            lhs = ev(term.lhs, env)
            rhs = ev(term.rhs, env)
            label = term.then_label if fold(term.cmp, [lhs, rhs], None) else term.else_label
            idx = 0
        elif isinstance(term, Ret):
            value = None if term.value is None else _ev_tree(term.value, env)
            if not stack:
                return IrRun(value, trace, high)
            frame = stack.pop()
            env = frame.env
            if frame.dest is not None:
                env[frame.dest] = value
            proc = program.procs[frame.proc]
            label, idx = frame.label, 0
        else:
            raise AssertionError(f"unhandled terminator {term!r}")


def _ev_tree(v, env):
    from .ir import VArray, VTuple
    if isinstance(v, VArray):
        return [_ev_tree(x, env) for x in v.items]
    if isinstance(v, VTuple):
        return tuple(_ev_tree(x, env) for x in v.items)
    if isinstance(v, Var):
        if v.name not in env:
            raise QTypeError(
                "operation fell off the end without returning a value"
                if v.name == "__missing__" else f"internal: unbound slot {v.name}")
        return env[v.name]
    value = v.value
    if isinstance(value, list):
        return [_ev_tree_const(x) for x in value]
    return value


def _ev_tree_const(x):
    if isinstance(x, list):
        return [_ev_tree_const(i) for i in x]
    return x
