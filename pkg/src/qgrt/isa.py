"""Text ISA for the control processor, with assembler and disassembler.

One instruction per line; comments start with `#` (outside quotes); labels end
with `:`. Header directives: `.qubits N` and `.rettype <descriptor>`.
Registers r0..r31 hold 32-bit two's-complement integers. `br` reads the flags
of the last `cmp`. Modified quantum ops keep their modifier prefixes in the
name (e.g. `ctrl-1:rz`).
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import AsmSyntax, UndefinedLabel, UnencodableImmediate

NUM_REGS = 32
CONDS = ("eq", "ne", "lt", "le", "gt", "ge")

# operand shapes per mnemonic (qop and pulse are special-cased)
FORMATS = {
    "ldi": ("r", "imm"),
    "add": ("r", "r", "r"),
    "sub": ("r", "r", "r"),
    "mul": ("r", "r", "r"),
    "and": ("r", "r", "r"),
    "or": ("r", "r", "r"),
    "xor": ("r", "r", "r"),
    "not": ("r", "r"),
    "cmp": ("r", "r"),
    "br": ("cond", "label"),
    "jmp": ("label",),
    "fmr": ("r", "q"),
    "nop": (),
    "qwait": ("imm",),
    "measure": ("q",),
    "init": ("q",),
    "stb": ("r", "imm"),
    "stw": ("r", "imm"),
    "std": ("r", "r", "imm"),
    "halt": (),
}

CLASSICAL_OPS = {"ldi", "add", "sub", "mul", "and", "or", "xor", "not", "cmp",
                 "br", "jmp", "fmr", "nop", "stb", "stw", "std"}
QUANTUM_OPS = {"qop", "pulse", "measure", "init", "qwait"}

INT32_MIN = -(2 ** 31)
INT32_MAX = 2 ** 31 - 1


def check_imm(value: int, what: str = "immediate") -> int:
    if not INT32_MIN <= value <= INT32_MAX:
        raise UnencodableImmediate(f"{what} {value} does not fit in 32 bits")
    return value


@dataclass
class Ins:
    op: str
    args: tuple = ()
    # qop extras
    name: str = ""
    qubits: tuple = ()
    params: tuple = ()
    text: str = ""       # pulse payload
    duration: int = 0    # pulse duration (ns)

    def render(self) -> str:
        if self.op == "qop":
            s = f"qop {self.name} " + ",".join(f"q{q}" for q in self.qubits)
            if self.params:
                s += " " + " ".join(_num(p) for p in self.params)
            return s
        if self.op == "pulse":
            return f'pulse {self.duration} "{self.text}" q{self.qubits[0]}'
        parts = [self.op]
        for shape, a in zip(FORMATS[self.op], self.args):
            if shape == "r":
                parts.append(f"r{a}")
            elif shape == "q":
                parts.append(f"q{a}")
            else:
                parts.append(str(a))
        return " ".join(parts)


def _num(p) -> str:
    if isinstance(p, float):
        return repr(p)
    return str(p)


@dataclass
class QProgram:
    instrs: list
    labels: dict                 # name -> instruction index
    qubit_count: int
    rettype_text: str
    uses_random: bool = False    # any measure/init present (needs a seed)

    def label_at(self, index: int) -> list:
        return [name for name, i in self.labels.items() if i == index]


_TOKEN = re.compile(r'"[^"]*"|[^\s,]+|,')


def _strip_comment(line: str) -> str:
    out = []
    in_str = False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        if ch == "#" and not in_str:
            break
        out.append(ch)
    return "".join(out)


def assemble(text: str) -> QProgram:
    instrs: list[Ins] = []
    labels: dict[str, int] = {}
    qubit_count = 0
    rettype_text = "unit"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith(".qubits"):
            try:
                qubit_count = int(line.split()[1])
            except (IndexError, ValueError):
                raise AsmSyntax(f"line {lineno}: bad .qubits directive") from None
            continue
        if line.startswith(".rettype"):
            rettype_text = line[len(".rettype"):].strip()
            if not rettype_text:
                raise AsmSyntax(f"line {lineno}: bad .rettype directive")
            continue
        if line.endswith(":") and " " not in line:
            name = line[:-1]
            if name in labels:
                raise AsmSyntax(f"line {lineno}: duplicate label {name!r}")
            labels[name] = len(instrs)
            continue
        instrs.append(_parse_ins(line, lineno))
    for ins in instrs:
        if ins.op in ("br", "jmp"):
            target = ins.args[-1]
            if target not in labels:
                raise UndefinedLabel(f"branch target {target!r} is not defined")
    uses_random = any(i.op in ("measure", "init") for i in instrs)
    return QProgram(instrs, labels, qubit_count, rettype_text, uses_random)


def _parse_ins(line: str, lineno: int) -> Ins:
    tokens = [t for t in _TOKEN.findall(line) if t != ","]
    op = tokens[0]
    rest = tokens[1:]
    if op == "qop":
        words = line.split()
        if len(words) < 3:
            raise AsmSyntax(f"line {lineno}: qop needs a name and qubits")
        name = words[1]
        qubits = tuple(_parse_qubit(t, lineno) for t in words[2].split(","))
        params = tuple(_parse_number(t, lineno) for t in words[3:])
        return Ins("qop", name=name, qubits=qubits, params=params)
    if op == "pulse":
        if len(rest) != 3 or not rest[1].startswith('"'):
            raise AsmSyntax(f'line {lineno}: pulse takes <ns> "text" qN')
        dur = _parse_int(rest[0], lineno)
        return Ins("pulse", qubits=(_parse_qubit(rest[2], lineno),),
                   text=rest[1][1:-1], duration=dur)
    if op not in FORMATS:
        raise AsmSyntax(f"line {lineno}: unknown mnemonic {op!r}")
    shapes = FORMATS[op]
    if len(rest) != len(shapes):
        raise AsmSyntax(f"line {lineno}: {op} takes {len(shapes)} operand(s)")
    args = []
    for shape, tok in zip(shapes, rest):
        if shape == "r":
            args.append(_parse_reg(tok, lineno))
        elif shape == "q":
            args.append(_parse_qubit(tok, lineno))
        elif shape == "cond":
            if tok not in CONDS:
                raise AsmSyntax(f"line {lineno}: unknown condition {tok!r}")
            args.append(tok)
        elif shape == "label":
            args.append(tok)
        else:  # imm
            args.append(check_imm(_parse_int(tok, lineno)))
    return Ins(op, tuple(args))


def _parse_reg(tok: str, lineno: int) -> int:
    if tok.startswith("r") and tok[1:].isdigit() and int(tok[1:]) < NUM_REGS:
        return int(tok[1:])
    raise AsmSyntax(f"line {lineno}: bad register {tok!r}")


def _parse_qubit(tok: str, lineno: int) -> int:
    if tok.startswith("q") and tok[1:].isdigit():
        return int(tok[1:])
    raise AsmSyntax(f"line {lineno}: bad qubit {tok!r}")


def _parse_int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise AsmSyntax(f"line {lineno}: bad integer {tok!r}") from None


def _parse_number(tok: str, lineno: int):
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        raise AsmSyntax(f"line {lineno}: bad number {tok!r}") from None


def disassemble(prog: QProgram) -> str:
    by_index: dict[int, list[str]] = {}
    for name, i in prog.labels.items():
        by_index.setdefault(i, []).append(name)
    lines = [f".qubits {prog.qubit_count}", f".rettype {prog.rettype_text}"]
    for i, ins in enumerate(prog.instrs):
        for name in by_index.get(i, []):
            lines.append(f"{name}:")
        lines.append(f"    {ins.render()}")
    for name in by_index.get(len(prog.instrs), []):
        lines.append(f"{name}:")
    return "\n".join(lines) + "\n"
