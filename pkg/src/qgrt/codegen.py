"""Code generation: residual IR to assembly text, plus the result epilogue.

Every IR instruction is planned into a fixed ISA line sequence once, and the
scheduler and emitter consume the same plans, so scheduled start cycles match
the cycles the VM will observe. Register allocation is a first-use linear
assignment over r1..r29 (r0 is a reserved zero, r30/r31 are scratch);
exceeding it is an error rather than a spill.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import RegisterSpill, Unsupported, UnsupportedReturn
from .frontend.types import ArrayT, INT, Prim, QType, TupleT, UNIT, type_text
from .ir import (Alloc, CondBr, Compute, Const, Free, IRProgram, Jump, Kill, Measure,
                 Proc, QOp, QubitRef, Ret, Sync, TimerReset, VArray, VTuple, Var, wrap32)
from .isa import check_imm
from .platform import PlatformConfig, Pulse, Reset

SCRATCH = ("r30", "r31")
ZERO_REG = "r0"
MAX_ALLOC = 29  # r1..r29

_INV_COND = {"eq": "ne", "ne": "eq", "lt": "ge", "ge": "lt", "le": "gt", "gt": "le"}


class _RegMap:
    def __init__(self):
        self.map: dict[str, str] = {}

    def reg(self, name: str) -> str:
        if name not in self.map:
            if len(self.map) >= MAX_ALLOC:
                raise RegisterSpill(
                    f"kernel needs more than {MAX_ALLOC} live registers; the control "
                    "processor has no spill memory")
            self.map[name] = f"r{len(self.map) + 1}"
        return self.map[name]


@dataclass
class InstrPlan:
    ir_index: int
    lines: list                  # assembly lines; labels end with ':'
    span: int                    # total ns once emitted back to back
    quantum_dur: int = 0         # duration of the leading quantum line, if any
    qubits: tuple = ()
    timing: object = None        # IRTiming or None
    is_quantum: bool = False
    resets_instr: object = None  # TimerReset carried by a zero-span event


@dataclass
class TermPlan:
    lines: list
    span: int


def used_regs(proc: Proc) -> set:
    used: set[str] = set()

    def scan_tree(v):
        if isinstance(v, Var):
            used.add(v.name)
        elif isinstance(v, (VTuple, VArray)):
            for i in v.items:
                scan_tree(i)

    for b in proc.blocks.values():
        for ins in b.instrs:
            if isinstance(ins, Compute):
                for a in ins.args:
                    if isinstance(a, Var):
                        used.add(a.name)
        t = b.term
        if isinstance(t, CondBr):
            for a in (t.lhs, t.rhs):
                if isinstance(a, Var):
                    used.add(a.name)
        elif isinstance(t, Ret) and t.value is not None:
            scan_tree(t.value)
    return used


class EmissionModel:
    """Plans every residual instruction; one source of truth for timing."""

    def __init__(self, program: IRProgram, config: PlatformConfig, classical_ns: int = 1,
                 f32_doubles: bool = False):
        self.program = program
        self.config = config
        self.classical_ns = classical_ns
        self.f32_doubles = f32_doubles
        self.proc = program.entry()
        self.order = list(self.proc.order)
        self.rm = _RegMap()
        self.uses = used_regs(self.proc)
        self.label_n = 0
        self.needs_zero = self._scan_needs_zero()
        self.plans: dict[str, list[InstrPlan]] = {}
        self.term_plans: dict[str, TermPlan] = {}
        self.prologue: list[str] = ["ldi r0 0"] if self.needs_zero else []
        for label in self.order:
            self._plan_block(label)

    def _scan_needs_zero(self) -> bool:
        for b in self.proc.blocks.values():
            for ins in b.instrs:
                if isinstance(ins, Compute) and ins.op == "neg":
                    return True
        return False

    def _local_label(self) -> str:
        self.label_n += 1
        return f".m{self.label_n}"

    def fallthrough(self, label: str) -> str | None:
        i = self.order.index(label)
        return self.order[i + 1] if i + 1 < len(self.order) else None

    def _qdur(self, name: str) -> int:
        return self.config.operations[name].duration_ns

    # -- per-instruction plans --------------------------------------------------

    def _plan_block(self, label: str) -> None:
        block = self.proc.blocks[label]
        plans: list[InstrPlan] = []
        if label == self.proc.entry and self.prologue:
            plans.append(InstrPlan(-1, list(self.prologue),
                                   len(self.prologue) * self.classical_ns))
        for i, ins in enumerate(block.instrs):
            plans.append(self._plan_instr(i, ins))
        self.plans[label] = plans
        self.term_plans[label] = self._plan_term(label, block.term)

    def _operand(self, a, lines: list, scratch: list) -> str:
        if isinstance(a, Var):
            return self.rm.reg(a.name)
        s = scratch.pop(0)
        lines.append(f"ldi {s} {check_imm(int(a.value))}")
        return s

    def _plan_instr(self, i: int, ins) -> InstrPlan:
        c = self.classical_ns
        if isinstance(ins, Compute):
            lines: list[str] = []
            scratch = list(SCRATCH)
            op = ins.op
            if op == "copy":
                a = ins.args[0]
                d = self.rm.reg(ins.dest)
                if isinstance(a, Var):
                    r = self.rm.reg(a.name)
                    lines.append(f"or {d} {r} {r}")
                else:
                    lines.append(f"ldi {d} {check_imm(int(a.value))}")
            elif op == "bnot":
                a = self._operand(ins.args[0], lines, scratch)
                s = scratch.pop(0)
                d = self.rm.reg(ins.dest)
                lines.append(f"ldi {s} 1")
                lines.append(f"xor {d} {a} {s}")
            elif op == "neg":
                a = self._operand(ins.args[0], lines, scratch)
                d = self.rm.reg(ins.dest)
                lines.append(f"sub {d} {ZERO_REG} {a}")
            elif op in ("eq", "ne", "lt", "le", "gt", "ge"):
                a = self._operand(ins.args[0], lines, scratch)
                b = self._operand(ins.args[1], lines, scratch)
                d = self.rm.reg(ins.dest)
                true_l = self._local_label()
                lines.append(f"cmp {a} {b}")
                lines.append(f"ldi {d} 1")
                lines.append(f"br {op} {true_l}")
                lines.append(f"ldi {d} 0")
                lines.append(f"{true_l}:")
            elif op in ("add", "sub", "mul", "and", "or", "xor"):
                a = self._operand(ins.args[0], lines, scratch)
                b = self._operand(ins.args[1], lines, scratch)
                d = self.rm.reg(ins.dest)
                lines.append(f"{op} {d} {a} {b}")
            else:
                raise Unsupported(f"cannot emit classical op {op!r}")
            return InstrPlan(i, lines, _count(lines) * c)
        if isinstance(ins, Measure):
            qi = _qidx(ins.qubit)
            lines = [f"measure q{qi}"]
            dur = self._qdur(ins.name)
            span = dur
            if ins.dest is not None and ins.dest in self.uses:
                lines.append(f"fmr {self.rm.reg(ins.dest)} q{qi}")
                span += c
            return InstrPlan(i, lines, span, dur, (qi,), ins.timing, True)
        if isinstance(ins, QOp):
            opdef = self.config.operations[ins.name]
            qis = tuple(_qidx(q) for q in ins.qubits)
            dur = opdef.duration_ns
            if isinstance(opdef.semantics, Reset):
                lines = [f"init q{qis[0]}"]
            elif isinstance(opdef.semantics, Pulse):
                lines = [f'pulse {dur} "{opdef.semantics.assembly}" q{qis[0]}']
            else:
                qlist = ",".join(f"q{q}" for q in qis)
                params = " ".join(_fmt_param(p.value) for p in ins.params)
                lines = [f"qop {ins.mod_name()} {qlist}" + (f" {params}" if params else "")]
            return InstrPlan(i, lines, dur, dur, qis, ins.timing, True)
        if isinstance(ins, (TimerReset, Sync)):
            timing = ins.timing if isinstance(ins, Sync) else None
            resets = ins if isinstance(ins, TimerReset) else None
            return InstrPlan(i, [], 0, 0, (), timing, False, resets)
        if isinstance(ins, (Alloc, Free, Kill)):
            return InstrPlan(i, [], 0)
        raise Unsupported(f"cannot emit {ins!r}")

    def _plan_term(self, label: str, term) -> TermPlan:
        c = self.classical_ns
        fall = self.fallthrough(label)
        if isinstance(term, Jump):
            lines = [] if term.target == fall else [f"jmp {term.target}"]
            return TermPlan(lines, _count(lines) * c)
        if isinstance(term, CondBr):
            lines = []
            scratch = list(SCRATCH)
            a = self._operand(term.lhs, lines, scratch)
            b = self._operand(term.rhs, lines, scratch)
            lines.append(f"cmp {a} {b}")
            if term.else_label == fall:
                lines.append(f"br {term.cmp} {term.then_label}")
            elif term.then_label == fall:
                lines.append(f"br {_INV_COND[term.cmp]} {term.else_label}")
            else:
                lines.append(f"br {term.cmp} {term.then_label}")
                lines.append(f"jmp {term.else_label}")
            return TermPlan(lines, _count(lines) * c)
        if isinstance(term, Ret):
            lines = emit_result_epilogue(self.program.ret_type, term.value, self.rm,
                                         self.f32_doubles)
            return TermPlan(lines, _count(lines) * c)
        raise AssertionError(f"unplanned terminator {term!r}")

    # -- final text -------------------------------------------------------------

    def emit(self, timed) -> str:
        out = [f".qubits {self.program.qubit_count}",
               f".rettype {type_text(self.program.ret_type)}"]
        for label in self.order:
            tb = timed.blocks[label]
            out.append(f"{label}:")
            for plan, gap in zip(self.plans[label], tb.gaps):
                if gap:
                    out.append(f"    qwait {gap}")
                out.extend(f"    {line}" if not line.endswith(":") else line
                           for line in plan.lines)
            if tb.pad:
                out.append(f"    qwait {tb.pad}")
            out.extend(f"    {line}" for line in self.term_plans[label].lines)
        return "\n".join(out) + "\n"


def _count(lines: list) -> int:
    return sum(1 for l in lines if not l.endswith(":"))


def _qidx(operand) -> int:
    v = operand.value if isinstance(operand, Const) else operand
    if isinstance(v, QubitRef):
        return v.index
    raise AssertionError(f"unresolved qubit operand {operand!r}")


def _fmt_param(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


# -- result epilogue -------------------------------------------------------------

def _flatten(qtype: QType, tree):
    """Flatten tuples into (scalar-or-array type, value tree) fields."""
    if isinstance(qtype, TupleT):
        if not isinstance(tree, VTuple) or len(tree.items) != len(qtype.elems):
            raise UnsupportedReturn(f"return value does not match {type_text(qtype)}")
        fields = []
        for t, item in zip(qtype.elems, tree.items):
            fields.extend(_flatten(t, item))
        return fields
    return [(qtype, tree)]


def _lay_block(fields, base: int, stores: list, f32: bool) -> int:
    """Assign addresses; arrays append their regions depth-first after the
    enclosing fixed part. Returns the end address."""
    sizes = {"bool": 1, "int": 4, "double": 4 if f32 else 8, "unit": 0}
    addr = base
    arrays = []
    for qtype, tree in fields:
        if isinstance(qtype, ArrayT):
            if not isinstance(tree, VArray):
                raise UnsupportedReturn("array return value must have static structure")
            arrays.append((addr, qtype.elem, tree.items))
            stores.append(("offset", addr, None))  # patched below
            addr += 4
        elif isinstance(qtype, Prim):
            stores.append((qtype.kind, addr, tree))
            addr += sizes[qtype.kind]
        else:
            raise AssertionError(f"unflattened type {qtype!r}")
    end = addr
    for field_addr, elem_t, items in arrays:
        # patch the offset word: relative to its own address
        for j, s in enumerate(stores):
            if s[0] == "offset" and s[1] == field_addr and s[2] is None:
                stores[j] = ("int", field_addr, Const(end - field_addr, INT))
                break
        stores.append(("int", end, Const(len(items), INT)))
        end += 4
        sub = []
        for item in items:
            sub.extend(_flatten(elem_t, item))
        end = _lay_block(sub, end, stores, f32)
    return end


def emit_result_epilogue(ret_type: QType, tree, rm: _RegMap,
                         f32_doubles: bool = False) -> list:
    """Store the serialized return value at address 0, then halt."""
    for bad in ("qubit", "timer", "time"):
        if _mentions(ret_type, bad):
            raise UnsupportedReturn(f"cannot return a {bad} to the host")
    lines: list[str] = []
    if ret_type != UNIT and tree is not None:
        stores: list = []
        _lay_block(_flatten(ret_type, tree), 0, stores, f32_doubles)
        for kind, addr, value in stores:
            if kind == "unit":
                continue
            if kind == "double":
                if not isinstance(value, Const):
                    raise UnsupportedReturn(
                        "measurement-dependent double results cannot be serialized "
                        "by the control processor")
                if f32_doubles:
                    (word,) = struct.unpack("<i", struct.pack("<f", float(value.value)))
                    lines.append(f"ldi {SCRATCH[0]} {word}")
                    lines.append(f"stw {SCRATCH[0]} {addr}")
                else:
                    lo, hi = struct.unpack("<ii", struct.pack("<d", float(value.value)))
                    lines.append(f"ldi {SCRATCH[0]} {lo}")
                    lines.append(f"ldi {SCRATCH[1]} {hi}")
                    lines.append(f"std {SCRATCH[0]} {SCRATCH[1]} {addr}")
                continue
            mnemonic = "stb" if kind == "bool" else "stw"
            if isinstance(value, Const):
                v = value.value
                imm = int(v) if not isinstance(v, bool) else int(v)
                lines.append(f"ldi {SCRATCH[0]} {check_imm(wrap32(imm))}")
                lines.append(f"{mnemonic} {SCRATCH[0]} {addr}")
            else:
                lines.append(f"{mnemonic} {rm.reg(value.name)} {addr}")
    lines.append("halt")
    return lines


def _mentions(qtype: QType, kind: str) -> bool:
    if isinstance(qtype, Prim):
        return qtype.kind == kind
    if isinstance(qtype, ArrayT):
        return _mentions(qtype.elem, kind)
    if isinstance(qtype, TupleT):
        return any(_mentions(t, kind) for t in qtype.elems)
    return False
