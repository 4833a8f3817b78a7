"""Statement-level intermediate form shared by the middle end.

A program is a set of procedures, each a CFG of basic blocks over named
slots. Before partial execution, operands reference source variables and
calls are explicit; after it, the program is a single procedure whose
remaining slots are runtime registers (``%N``), every quantum operand is a
resolved physical qubit index, and every classical instruction has at least
one dynamic operand.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .frontend.types import QType, type_text


def wrap32(x: int) -> int:
    """32-bit two's-complement wraparound (the register value domain)."""
    return ((x + 0x80000000) & 0xFFFFFFFF) - 0x80000000


# -- operands -----------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: object
    qtype: QType

    def __repr__(self) -> str:
        if self.qtype is not None and type_text(self.qtype) == "time":
            return f"{self.value}ns"
        if isinstance(self.value, bool):
            return "true" if self.value else "false"
        return repr(self.value)


Operand = Var | Const


@dataclass(frozen=True)
class QubitRef:
    """A resolved physical qubit index (a Const value)."""
    index: int

    def __repr__(self) -> str:
        return f"q{self.index}"


@dataclass(frozen=True)
class TimerTok:
    """A timer instance (a Const value)."""
    name: str

    def __repr__(self) -> str:
        return self.name


# -- value trees (structured return values / composite data) -------------------

@dataclass(frozen=True)
class VTuple:
    items: tuple

    def __repr__(self) -> str:
        return "(" + ", ".join(repr(i) for i in self.items) + ")"


@dataclass(frozen=True)
class VArray:
    items: tuple

    def __repr__(self) -> str:
        return "{" + ", ".join(repr(i) for i in self.items) + "}"


ValueTree = Operand | VTuple | VArray


# -- timing --------------------------------------------------------------------

@dataclass(frozen=True)
class IRTiming:
    constraints: tuple  # of (timer: Operand, cmp: str, time_expr: Operand)
    resets: tuple       # of Operand

    def __repr__(self) -> str:
        parts = []
        if self.constraints:
            parts.append("@{" + " && ".join(
                f"{t!r} {c} {e!r}" for t, c, e in self.constraints) + "}")
        if self.resets:
            parts.append("!{" + ", ".join(repr(r) for r in self.resets) + "}")
        return " ".join(parts)


# -- instructions -----------------------------------------------------------------

@dataclass
class Compute:
    dest: str
    op: str                  # add sub mul div mod neg and or xor bnot tod
    #                          eq ne lt le gt ge len index mkarr mktup copy
    args: list
    rtype: QType | None = None

    def __repr__(self) -> str:
        return f"{self.dest} = {self.op} " + ", ".join(repr(a) for a in self.args)


@dataclass
class SetIndex:
    array: Operand
    index: Operand
    value: Operand

    def __repr__(self) -> str:
        return f"setindex {self.array!r}[{self.index!r}] = {self.value!r}"


@dataclass
class QOp:
    name: str
    mods: tuple              # outermost-first: ('ctrl', n) | ('inv',)
    qubits: list
    params: list
    timing: IRTiming | None = None

    def mod_name(self) -> str:
        text = self.name
        for m in reversed(self.mods):
            text = (f"ctrl-{m[1]}:" if m[0] == "ctrl" else "inv:") + text
        return text

    def __repr__(self) -> str:
        s = f"qop {self.mod_name()} " + ",".join(repr(q) for q in self.qubits)
        if self.params:
            s += " " + " ".join(repr(p) for p in self.params)
        if self.timing:
            s += f" {self.timing!r}"
        return s


@dataclass
class Measure:
    dest: str | None
    qubit: Operand
    timing: IRTiming | None = None
    name: str = "measure"

    def __repr__(self) -> str:
        s = f"{self.dest} = " if self.dest else ""
        s += f"measure {self.qubit!r}"
        if self.timing:
            s += f" {self.timing!r}"
        return s


@dataclass
class TimerReset:
    timers: list

    def __repr__(self) -> str:
        return "timer-reset " + ", ".join(repr(t) for t in self.timers)


@dataclass
class Alloc:
    names: list
    indices: list | None = None

    def __repr__(self) -> str:
        if self.indices is not None:
            return "alloc " + ", ".join(f"q{i}" for i in self.indices)
        return "alloc " + ", ".join(self.names)


@dataclass
class Free:
    names: list
    indices: list | None = None

    def __repr__(self) -> str:
        if self.indices is not None:
            return "free " + ", ".join(f"q{i}" for i in self.indices)
        return "free " + ", ".join(self.names)


@dataclass
class Kill:
    """Scope-exit marker: the named slots are dead past this point."""
    names: list

    def __repr__(self) -> str:
        return "kill " + ", ".join(self.names)


@dataclass
class Call:
    dest: str | None
    name: str
    args: list

    def __repr__(self) -> str:
        prefix = f"{self.dest} = " if self.dest else ""
        return f"{prefix}call {self.name}(" + ", ".join(repr(a) for a in self.args) + ")"


@dataclass
class Sync:
    """Zero-duration anchor carrying the timing of a composed-operation call."""
    timing: IRTiming

    def __repr__(self) -> str:
        return f"sync {self.timing!r}"


Instr = Compute | SetIndex | QOp | Measure | TimerReset | Alloc | Free | Kill | Call | Sync


# -- terminators ----------------------------------------------------------------

@dataclass
class Jump:
    target: str

    def __repr__(self) -> str:
        return f"jump {self.target}"


@dataclass
class CondBr:
    cmp: str        # eq ne lt le gt ge
    lhs: Operand
    rhs: Operand
    then_label: str
    else_label: str

    def __repr__(self) -> str:
        return f"br {self.cmp} {self.lhs!r}, {self.rhs!r} ? {self.then_label} : {self.else_label}"


@dataclass
class Ret:
    value: object   # ValueTree | None

    def __repr__(self) -> str:
        return "return" if self.value is None else f"return {self.value!r}"


Terminator = Jump | CondBr | Ret


@dataclass
class BasicBlock:
    label: str
    instrs: list = field(default_factory=list)
    term: Terminator | None = None


@dataclass
class Proc:
    name: str
    params: list                       # (name, QType)
    ret_type: QType
    entry: str = ""
    blocks: dict = field(default_factory=dict)
    order: list = field(default_factory=list)
    loop_headers: dict = field(default_factory=dict)   # label -> frozenset(assigned vars)

    def add_block(self, label: str) -> BasicBlock:
        b = BasicBlock(label)
        self.blocks[label] = b
        self.order.append(label)
        return b


@dataclass
class IRProgram:
    procs: dict
    entry_proc: str
    ret_type: QType
    qubit_count: int = 0

    def entry(self) -> Proc:
        return self.procs[self.entry_proc]


def successors(term: Terminator) -> list[str]:
    if isinstance(term, Jump):
        return [term.target]
    if isinstance(term, CondBr):
        return [term.then_label, term.else_label]
    return []


def ir_text(prog: IRProgram) -> str:
    """One instruction per line (the --dump-ir form)."""
    out = []
    for pname in prog.procs:
        proc = prog.procs[pname]
        sig = ", ".join(f"{n}: {type_text(t)}" for n, t in proc.params)
        out.append(f"proc {pname}({sig}) -> {type_text(proc.ret_type)}")
        for label in proc.order:
            b = proc.blocks[label]
            head = f"{label}:"
            if label in proc.loop_headers:
                head += f"    # loop header, assigns {sorted(proc.loop_headers[label])}"
            out.append(head)
            for ins in b.instrs:
                out.append(f"    {ins!r}")
            out.append(f"    {b.term!r}")
    return "\n".join(out) + "\n"


def merge_straight_jumps(proc: Proc) -> None:
    """Splice B into A when A ends `jump B` and B has no other predecessor."""
    while True:
        preds: dict[str, list[str]] = {label: [] for label in proc.order}
        for label in proc.order:
            for s in successors(proc.blocks[label].term):
                preds[s].append(label)
        merged = False
        for label in list(proc.order):
            b = proc.blocks.get(label)
            if b is None or not isinstance(b.term, Jump):
                continue
            target = b.term.target
            if target == label or target == proc.entry:
                continue
            if len(preds[target]) != 1 or target in proc.loop_headers:
                continue
            tb = proc.blocks[target]
            b.instrs.extend(tb.instrs)
            b.term = tb.term
            del proc.blocks[target]
            proc.order.remove(target)
            merged = True
            break
        if not merged:
            return


def drop_unreachable(proc: Proc) -> None:
    seen = set()
    stack = [proc.entry]
    while stack:
        label = stack.pop()
        if label in seen:
            continue
        seen.add(label)
        stack.extend(successors(proc.blocks[label].term))
    proc.order = [l for l in proc.order if l in seen]
    proc.blocks = {l: b for l, b in proc.blocks.items() if l in seen}


def canonical_text(prog: IRProgram) -> str:
    """ir_text with blocks and slots renamed in traversal order, for
    structural comparisons (e.g. the idempotence check)."""
    out = []
    for pname, proc in prog.procs.items():
        label_map: dict[str, str] = {}
        var_map: dict[str, str] = {}

        def blk(label: str) -> str:
            return label_map.setdefault(label, f"B{len(label_map)}")

        def slot(name: str) -> str:
            return var_map.setdefault(name, f"v{len(var_map)}")

        def op(o):
            if isinstance(o, Var):
                return Var(slot(o.name))
            return o

        def tree(v):
            if isinstance(v, VTuple):
                return VTuple(tuple(tree(i) for i in v.items))
            if isinstance(v, VArray):
                return VArray(tuple(tree(i) for i in v.items))
            return op(v)

        order = []
        seen = set()
        stack = [proc.entry]
        while stack:
            label = stack.pop(0)
            if label in seen or label not in proc.blocks:
                continue
            seen.add(label)
            order.append(label)
            stack.extend(successors(proc.blocks[label].term))
        out.append(f"proc {pname}")
        for label in order:
            b = proc.blocks[label]
            out.append(f"{blk(label)}:")
            for ins in b.instrs:
                if isinstance(ins, Compute):
                    out.append(f"    {slot(ins.dest)} = {ins.op} "
                               + ", ".join(repr(op(a)) for a in ins.args))
                elif isinstance(ins, Measure):
                    d = f"{slot(ins.dest)} = " if ins.dest else ""
                    out.append(f"    {d}measure {op(ins.qubit)!r}"
                               + (f" {ins.timing!r}" if ins.timing else ""))
                elif isinstance(ins, Kill):
                    continue
                else:
                    out.append(f"    {ins!r}")
            t = b.term
            if isinstance(t, Jump):
                out.append(f"    jump {blk(t.target)}")
            elif isinstance(t, CondBr):
                out.append(f"    br {t.cmp} {op(t.lhs)!r}, {op(t.rhs)!r} ? "
                           f"{blk(t.then_label)} : {blk(t.else_label)}")
            else:
                out.append(f"    return {tree(t.value)!r}" if t.value is not None else "    return")
    return "\n".join(out) + "\n"
