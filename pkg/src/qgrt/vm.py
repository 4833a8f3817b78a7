"""Functional simulator of the quantum coprocessor.

Executes the mixed classical/quantum instruction stream serially: classical
instructions cost a configurable 1 ns each, quantum instructions advance the
cycle counter by their configured duration, and `qwait` by its argument.
Measurement results become readable through `fmr` after the measure retires,
which in this serial model is always the following instruction at the
earliest.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .errors import (CycleBudgetExceeded, FmrBeforeMeasure, IllegalInstruction,
                     MemoryOutOfRange, TooManyQubits)
from .ir import wrap32
from .isa import Ins, QProgram
from .platform import MeasureSem, PlatformConfig, Reset, find_semantics
from .qsim import MAX_QUBITS, QuantumState, build_unitary

DEFAULT_MEMORY = 64 * 1024

_CLASSICAL = {"ldi", "add", "sub", "mul", "and", "or", "xor", "not", "cmp",
              "br", "jmp", "fmr", "nop", "stb", "stw", "std"}


@dataclass
class VmState:
    program: QProgram
    config: PlatformConfig
    seed: int
    classical_ns: int = 1
    strict_pulse: bool = False
    pc: int = 0
    regs: list = field(default_factory=lambda: [0] * 32)
    cmp_flag: int | None = None
    cycle: int = 0
    halted: bool = False
    mem: bytearray = field(default_factory=lambda: bytearray(DEFAULT_MEMORY))
    qstate: QuantumState | None = None
    last_meas: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)           # {cycle, instr, outcome?}
    meas_trace: list = field(default_factory=list)      # (qubit, outcome)

    def measure_duration(self) -> int:
        op = find_semantics(self.config, MeasureSem)
        if op is None:
            raise IllegalInstruction("platform config defines no measure operation")
        return op.duration_ns

    def init_duration(self) -> int:
        op = find_semantics(self.config, Reset)
        if op is None:
            raise IllegalInstruction("platform config defines no reset operation")
        return op.duration_ns


def load(program: QProgram, config: PlatformConfig, seed: int,
         memory_size: int = DEFAULT_MEMORY, zero_init: bool = False,
         strict_pulse: bool = False, classical_ns: int = 1) -> VmState:
    if program.qubit_count > config.qubit_count:
        raise TooManyQubits(
            f"program needs {program.qubit_count} qubits, platform has "
            f"{config.qubit_count}")
    if program.qubit_count > MAX_QUBITS:
        raise TooManyQubits(
            f"program needs {program.qubit_count} qubits, the state-vector "
            f"backend caps at {MAX_QUBITS}")
    vm = VmState(program, config, seed, classical_ns, strict_pulse,
                 mem=bytearray(memory_size))
    vm.qstate = QuantumState(seed, zero_init=zero_init)
    for q in range(program.qubit_count):
        vm.qstate.ensure(q)
    return vm


def _u32(x: int) -> int:
    return x & 0xFFFFFFFF


def _parse_mods(name: str) -> tuple[str, tuple]:
    mods = []
    while True:
        if name.startswith("inv:"):
            mods.append(("inv",))
            name = name[4:]
        elif name.startswith("ctrl-"):
            head, _, rest = name.partition(":")
            try:
                n = int(head[5:])
            except ValueError:
                raise IllegalInstruction(f"bad modifier prefix in {name!r}") from None
            mods.append(("ctrl", n))
            name = rest
        else:
            return name, tuple(mods)


def step(vm: VmState) -> str:
    if vm.halted:
        return "halted"
    if vm.pc >= len(vm.program.instrs):
        raise IllegalInstruction("execution fell off the end of the program")
    ins: Ins = vm.program.instrs[vm.pc]
    entry = {"cycle": vm.cycle, "instr": ins.render()}
    vm.pc += 1
    op = ins.op

    if op in _CLASSICAL:
        _classical(vm, ins)
        vm.cycle += vm.classical_ns
    elif op == "qwait":
        vm.cycle += ins.args[0]
    elif op == "measure":
        q = ins.args[0]
        _check_qubit(vm, q)
        outcome = vm.qstate.measure(q)
        vm.last_meas[q] = outcome
        vm.meas_trace.append((q, outcome))
        entry["outcome"] = outcome
        vm.cycle += vm.measure_duration()
    elif op == "init":
        q = ins.args[0]
        _check_qubit(vm, q)
        vm.qstate.reset(q)
        vm.cycle += vm.init_duration()
    elif op == "qop":
        base, mods = _parse_mods(ins.name)
        opdef = vm.config.operations.get(base)
        if opdef is None:
            raise IllegalInstruction(f"unknown quantum operation {base!r}")
        for q in ins.qubits:
            _check_qubit(vm, q)
        vm.qstate.apply(build_unitary(vm.config, base, mods, list(ins.params)),
                        list(ins.qubits))
        vm.cycle += opdef.duration_ns
    elif op == "pulse":
        if vm.strict_pulse:
            raise IllegalInstruction(
                "pulse execution is disabled in strict-pulse mode")
        _check_qubit(vm, ins.qubits[0])
        vm.cycle += ins.duration  # identity semantics
    elif op == "halt":
        vm.halted = True
    else:
        raise IllegalInstruction(f"unknown instruction {op!r}")
    vm.trace.append(entry)
    return "halted" if vm.halted else "running"


def _check_qubit(vm: VmState, q: int) -> None:
    if q >= vm.program.qubit_count:
        raise IllegalInstruction(
            f"qubit q{q} outside the program's declared {vm.program.qubit_count}")


def _classical(vm: VmState, ins: Ins) -> None:
    op = ins.op
    r = vm.regs
    if op == "ldi":
        r[ins.args[0]] = wrap32(ins.args[1])
    elif op in ("add", "sub", "mul"):
        a, b = r[ins.args[1]], r[ins.args[2]]
        v = a + b if op == "add" else a - b if op == "sub" else a * b
        r[ins.args[0]] = wrap32(v)
    elif op in ("and", "or", "xor"):
        a, b = _u32(r[ins.args[1]]), _u32(r[ins.args[2]])
        v = a & b if op == "and" else a | b if op == "or" else a ^ b
        r[ins.args[0]] = wrap32(v)
    elif op == "not":
        r[ins.args[0]] = wrap32(~r[ins.args[1]])
    elif op == "cmp":
        a, b = r[ins.args[0]], r[ins.args[1]]
        vm.cmp_flag = (a > b) - (a < b)
    elif op == "br":
        if vm.cmp_flag is None:
            raise IllegalInstruction("br with no preceding cmp")
        cond, target = ins.args
        take = {"eq": vm.cmp_flag == 0, "ne": vm.cmp_flag != 0,
                "lt": vm.cmp_flag < 0, "le": vm.cmp_flag <= 0,
                "gt": vm.cmp_flag > 0, "ge": vm.cmp_flag >= 0}[cond]
        if take:
            vm.pc = vm.program.labels[target]
    elif op == "jmp":
        vm.pc = vm.program.labels[ins.args[0]]
    elif op == "fmr":
        d, q = ins.args
        if q not in vm.last_meas:
            raise FmrBeforeMeasure(f"fmr before any measurement of q{q}")
        vm.regs[d] = vm.last_meas[q]
    elif op == "nop":
        pass
    elif op in ("stb", "stw"):
        reg, addr = ins.args
        size = 1 if op == "stb" else 4
        _check_mem(vm, addr, size)
        if op == "stb":
            vm.mem[addr] = _u32(vm.regs[reg]) & 0xFF
        else:
            vm.mem[addr:addr + 4] = struct.pack("<i", vm.regs[reg])
    elif op == "std":
        ra, rb, addr = ins.args
        _check_mem(vm, addr, 8)
        vm.mem[addr:addr + 8] = struct.pack("<ii", vm.regs[ra], vm.regs[rb])
    else:
        raise AssertionError(op)


def _check_mem(vm: VmState, addr: int, size: int) -> None:
    if addr < 0 or addr + size > len(vm.mem):
        raise MemoryOutOfRange(f"store of {size} byte(s) at {addr} is out of range")


def run(vm: VmState, max_cycles: int | None = None, max_steps: int = 10 ** 7) -> VmState:
    steps = 0
    while not vm.halted:
        step(vm)
        steps += 1
        if max_cycles is not None and vm.cycle > max_cycles:
            raise CycleBudgetExceeded(f"exceeded {max_cycles} cycles without halting")
        if steps > max_steps:
            raise CycleBudgetExceeded(f"exceeded {max_steps} instructions without halting")
    return vm


def read_memory(vm: VmState, addr: int, length: int) -> bytes:
    if addr < 0 or length < 0 or addr + length > len(vm.mem):
        raise MemoryOutOfRange(f"read of {length} byte(s) at {addr} is out of range")
    return bytes(vm.mem[addr:addr + length])
