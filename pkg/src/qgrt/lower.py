"""Lowering: type-checked AST to the statement-level CFG.

Structured control flow becomes blocks and branches; `using` becomes
alloc/free pairs (freed on every exit path, including break/continue/return);
scoped names are alpha-renamed to unique slots. Calls to composed operations
end their block so the partial executor can inline them; opaque calls lower
directly to quantum instructions. `duration(op)` folds here.
"""
from __future__ import annotations

from .errors import QTypeError, Unsupported
from .frontend import ast
from .frontend.typecheck import TypedProgram
from .frontend.types import (ArrayT, BOOL, DOUBLE, INT, QType, TIME, TIME_UNITS, TIMER,
                             TupleT, UNIT)
from .ir import (Alloc, BasicBlock, Call, CondBr, Compute, Const, Free, IRProgram,
                 IRTiming, Jump, Kill, Measure, Proc, QOp, Ret, SetIndex, Sync,
                 TimerReset, Var)
from .platform import MeasureSem

_MISSING_RETURN = "__missing__"

PREDECLARED = {"PI": Const(3.141592653589793, DOUBLE)}

_BINOPS = {"+": "add", "-": "sub", "*": "mul", "/": "div", "%": "mod",
           "&&": "and", "||": "or",
           "==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge"}

_CMP_SWAP = {"eq": "ne", "ne": "eq", "lt": "ge", "ge": "lt", "le": "gt", "gt": "le"}


def time_lit_ns(magnitude: float, unit: str) -> int:
    ns = magnitude * TIME_UNITS[unit]
    return int(ns + 0.5) if ns >= 0 else -int(-ns + 0.5)


def proc_key(pkg: str, name: str) -> str:
    return f"{pkg}::{name}" if pkg else name


class _Scopes:
    def __init__(self):
        self.stack: list[dict[str, str]] = [{}]
        self.counts: dict[str, int] = {}

    def push(self) -> None:
        self.stack.append({})

    def pop(self) -> list[str]:
        return list(self.stack.pop().values())

    def declare(self, name: str) -> str:
        n = self.counts.get(name, 0)
        self.counts[name] = n + 1
        slot = name if n == 0 else f"{name}.{n}"
        self.stack[-1][name] = slot
        return slot

    def lookup(self, name: str) -> str | None:
        for frame in reversed(self.stack):
            if name in frame:
                return frame[name]
        return None


class _ProcLowerer:
    def __init__(self, typed: TypedProgram, unit: ast.SourceUnit, decl: ast.OperationDecl):
        self.typed = typed
        self.unit = unit
        self.decl = decl
        self.proc = Proc(proc_key(unit.package, decl.name),
                         [(p.name, p.qtype) for p in decl.params], decl.ret)
        self.scopes = _Scopes()
        self.tmp = 0
        self.label_n = 0
        self.cur: BasicBlock | None = None
        # (header, exit, using_depth) per enclosing loop
        self.loops: list[tuple[str, str, int]] = []
        # open using scopes: list of slot-name lists
        self.using: list[list[str]] = []

    # -- plumbing -----------------------------------------------------------

    def new_label(self, hint: str) -> str:
        self.label_n += 1
        return f"{hint}{self.label_n}"

    def start_block(self, label: str) -> BasicBlock:
        self.cur = self.proc.add_block(label)
        return self.cur

    def emit(self, ins) -> None:
        self.cur.instrs.append(ins)

    def finish(self, term) -> None:
        self.cur.term = term
        self.cur = None

    def temp(self) -> str:
        self.tmp += 1
        return f"$t{self.tmp}"

    # -- driver ----------------------------------------------------------------

    def lower(self) -> Proc:
        entry = self.new_label("entry")
        self.proc.entry = entry
        self.start_block(entry)
        for p in self.decl.params:
            self.scopes.stack[-1][p.name] = p.name
        self.lower_block(self.decl.body)
        if self.cur is not None:
            if self.decl.ret == UNIT:
                self.finish(Ret(None))
            else:
                self.finish(Ret(Var(_MISSING_RETURN)))
        return self.proc

    # -- statements --------------------------------------------------------------

    def lower_block(self, block: ast.Block) -> None:
        self.scopes.push()
        for stmt in block.stmts:
            if self.cur is None:
                break  # unreachable code after return/break
            self.lower_stmt(stmt)
        dead = self.scopes.pop()
        if self.cur is not None and dead:
            self.emit(Kill(dead))

    def lower_stmt(self, stmt: ast.Stmt) -> None:
        if isinstance(stmt, ast.VarDecl):
            if stmt.decl_type == TIMER:
                slots = [self.scopes.declare(d.name) for d in stmt.declarators]
                self.emit(TimerReset([Var(s) for s in slots]))
                return
            for d in stmt.declarators:
                value = self.lower_expr(d.init, expect=stmt.decl_type)
                slot = self.scopes.declare(d.name)
                self.emit(Compute(slot, "copy", [value], stmt.decl_type))
            return
        if isinstance(stmt, ast.Assign):
            if isinstance(stmt.target, ast.Ident):
                value = self.lower_expr(stmt.value, expect=stmt.target.qtype)
                slot = self.scopes.lookup(stmt.target.name)
                self.emit(Compute(slot, "copy", [value], stmt.target.qtype))
            else:
                arr = self.lower_expr(stmt.target.array)
                idx = self.lower_expr(stmt.target.index)
                value = self.lower_expr(stmt.value, expect=stmt.target.qtype)
                self.emit(SetIndex(arr, idx, value))
            return
        if isinstance(stmt, ast.If):
            then_l = self.new_label("then")
            else_l = self.new_label("else") if stmt.els is not None else None
            join_l = self.new_label("join")
            self.lower_branch(stmt.cond, then_l, else_l or join_l)
            self.start_block(then_l)
            self.lower_block(stmt.then)
            if self.cur is not None:
                self.finish(Jump(join_l))
            if stmt.els is not None:
                self.start_block(else_l)
                self.lower_block(stmt.els)
                if self.cur is not None:
                    self.finish(Jump(join_l))
            self.start_block(join_l)
            return
        if isinstance(stmt, ast.While):
            header = self.new_label("loop")
            body_l = self.new_label("body")
            exit_l = self.new_label("exit")
            self.proc.loop_headers[header] = self._assigned_vars(stmt.body)
            self.finish(Jump(header))
            self.start_block(header)
            blocks_before = len(self.proc.order)
            self.lower_branch(stmt.cond, body_l, exit_l, in_loop_header=True)
            if len(self.proc.order) != blocks_before:
                raise Unsupported(
                    "a loop condition may not call composed operations", stmt.span)
            self.start_block(body_l)
            self.loops.append((header, exit_l, len(self.using)))
            self.lower_block(stmt.body)
            self.loops.pop()
            if self.cur is not None:
                self.finish(Jump(header))
            self.start_block(exit_l)
            return
        if isinstance(stmt, ast.Break):
            self._free_down_to(self.loops[-1][2])
            self.finish(Jump(self.loops[-1][1]))
            return
        if isinstance(stmt, ast.Continue):
            self._free_down_to(self.loops[-1][2])
            self.finish(Jump(self.loops[-1][0]))
            return
        if isinstance(stmt, ast.Return):
            value = None
            if stmt.value is not None:
                value = self.lower_expr(stmt.value, expect=self.decl.ret)
            self._free_down_to(0)
            self.finish(Ret(value))
            return
        if isinstance(stmt, ast.Using):
            self.scopes.push()
            slots = [self.scopes.declare(b.name) for b in stmt.bindings]
            self.emit(Alloc(slots))
            self.using.append(slots)
            self.lower_block(stmt.body)
            self.using.pop()
            self.scopes.pop()
            if self.cur is not None:
                self.emit(Free(slots))
                self.emit(Kill(slots))
            return
        if isinstance(stmt, ast.ExprStmt):
            timing = self._lower_timing(stmt.timing)
            self.lower_expr(stmt.expr, timing=timing, discard=True)
            return
        raise AssertionError(f"unlowered statement {stmt!r}")

    def _free_down_to(self, depth: int) -> None:
        for slots in reversed(self.using[depth:]):
            self.emit(Free(slots))

    def _assigned_vars(self, body: ast.Block) -> frozenset:
        """Outer-scope slots assigned anywhere inside a loop body."""
        names = set()
        for n in ast.walk(body):
            target = None
            if isinstance(n, ast.Assign):
                target = n.target
            if isinstance(target, ast.Index):
                target = target.array
            if isinstance(target, ast.Ident):
                slot = self.scopes.lookup(target.name)
                if slot is not None:
                    names.add(slot)
        return frozenset(names)

    def _lower_timing(self, t: ast.TimingAnnotation | None) -> IRTiming | None:
        if t is None:
            return None
        constraints = tuple(
            (Var(self.scopes.lookup(c.timer)), c.cmp, self.lower_expr(c.time_expr))
            for c in t.constraints)
        resets = tuple(Var(self.scopes.lookup(r)) for r in t.resets)
        return IRTiming(constraints, resets)

    # -- conditions ---------------------------------------------------------------

    def lower_branch(self, cond: ast.Expr, then_l: str, else_l: str,
                     in_loop_header: bool = False) -> None:
        if isinstance(cond, ast.UnOp) and cond.op == "!":
            self.lower_branch(cond.operand, else_l, then_l, in_loop_header)
            return
        if isinstance(cond, ast.BinOp) and _BINOPS.get(cond.op) in _CMP_SWAP:
            lhs, rhs = self._lower_promoted_pair(cond.lhs, cond.rhs)
            self.finish(CondBr(_BINOPS[cond.op], lhs, rhs, then_l, else_l))
            return
        value = self.lower_expr(cond)
        self.finish(CondBr("ne", value, Const(False, BOOL), then_l, else_l))

    def _lower_promoted_pair(self, a: ast.Expr, b: ast.Expr):
        lhs = self.lower_expr(a)
        rhs = self.lower_expr(b)
        if a.qtype == INT and b.qtype == DOUBLE:
            lhs = self._tod(lhs)
        elif a.qtype == DOUBLE and b.qtype == INT:
            rhs = self._tod(rhs)
        return lhs, rhs

    def _tod(self, operand):
        t = self.temp()
        self.emit(Compute(t, "tod", [operand], DOUBLE))
        return Var(t)

    # -- expressions -----------------------------------------------------------------

    def lower_expr(self, e: ast.Expr, expect: QType | None = None,
                   timing: IRTiming | None = None, discard: bool = False):
        v = self._lower_expr_inner(e, expect, timing, discard)
        if v is not None and expect == DOUBLE and e.qtype == INT:
            v = self._tod(v)
        return v

    def _lower_expr_inner(self, e: ast.Expr, expect: QType | None,
                          timing: IRTiming | None, discard: bool):
        if isinstance(e, ast.IntLit):
            return Const(e.value, INT)
        if isinstance(e, ast.DoubleLit):
            return Const(e.value, DOUBLE)
        if isinstance(e, ast.BoolLit):
            return Const(e.value, BOOL)
        if isinstance(e, ast.TimeLit):
            return Const(time_lit_ns(e.magnitude, e.unit), TIME)
        if isinstance(e, ast.Ident):
            slot = self.scopes.lookup(e.name)
            if slot is None:
                return PREDECLARED[e.name]
            return Var(slot)
        if isinstance(e, ast.UnOp):
            operand = self.lower_expr(e.operand)
            t = self.temp()
            self.emit(Compute(t, "bnot" if e.op == "!" else "neg", [operand], e.qtype))
            return Var(t)
        if isinstance(e, ast.BinOp):
            if e.qtype == DOUBLE or _BINOPS[e.op] in _CMP_SWAP:
                lhs, rhs = self._lower_promoted_pair(e.lhs, e.rhs)
            else:
                lhs = self.lower_expr(e.lhs)
                rhs = self.lower_expr(e.rhs)
            t = self.temp()
            self.emit(Compute(t, _BINOPS[e.op], [lhs, rhs], e.qtype))
            return Var(t)
        if isinstance(e, ast.Index):
            arr = self.lower_expr(e.array)
            idx = self.lower_expr(e.index)
            t = self.temp()
            self.emit(Compute(t, "index", [arr, idx], e.qtype))
            return Var(t)
        if isinstance(e, ast.Length):
            arr = self.lower_expr(e.array)
            t = self.temp()
            self.emit(Compute(t, "len", [arr], INT))
            return Var(t)
        if isinstance(e, ast.ArrayLit):
            elem = expect.elem if isinstance(expect, ArrayT) else (
                e.qtype.elem if isinstance(e.qtype, ArrayT) else None)
            items = [self.lower_expr(i, expect=elem) for i in e.items]
            t = self.temp()
            self.emit(Compute(t, "mkarr", items, expect or e.qtype))
            return Var(t)
        if isinstance(e, ast.TupleExpr):
            elems = expect.elems if isinstance(expect, TupleT) else [None] * len(e.items)
            items = [self.lower_expr(i, expect=w) for i, w in zip(e.items, elems)]
            t = self.temp()
            self.emit(Compute(t, "mktup", items, expect or e.qtype))
            return Var(t)
        if isinstance(e, ast.DurationOf):
            opdef = self.typed.config.operations[e.resolved.name]
            return Const(opdef.duration_ns, TIME)
        if isinstance(e, ast.Call):
            return self.lower_call(e, timing, discard)
        raise AssertionError(f"unlowered expression {e!r}")

    def lower_call(self, e: ast.Call, timing: IRTiming | None, discard: bool):
        # modifier chains bottom out at an opaque operation
        mods: list[tuple] = []
        callee = e.callee
        ctrl_qubits: list = []
        while isinstance(callee, ast.Modifier):
            if callee.kind == "control":
                n = len(callee.args) - 1
                mods.append(("ctrl", n))
                ctrl_qubits.extend(self.lower_expr(q) for q in callee.args[:-1])
            else:
                mods.append(("inv",))
            callee = callee.args[-1]
        decl = callee.resolved
        if isinstance(decl, ast.OpaqueDecl):
            opdef = self.typed.config.operations[decl.name]
            qubits = list(ctrl_qubits)
            params = []
            for p, arg in zip(decl.params, e.args):
                lowered = self.lower_expr(arg, expect=p.qtype)
                if p.qtype.kind == "qubit":
                    qubits.append(lowered)
                else:
                    params.append(lowered)
            if isinstance(opdef.semantics, MeasureSem):
                dest = None if discard else self.temp()
                self.emit(Measure(dest, qubits[0], timing, name=decl.name))
                return Var(dest) if dest else None
            self.emit(QOp(decl.name, tuple(mods), qubits, params, timing))
            return None
        # composed operation: inline at partial-execution time
        args = [self.lower_expr(a, expect=p.qtype) for a, p in zip(e.args, decl.params)]
        if timing is not None:
            self.emit(Sync(timing))
        dest = None if (discard or decl.ret == UNIT) else self.temp()
        pkg = self.unit.visible[callee.name][0]
        self.emit(Call(dest, proc_key(pkg, decl.name), args))
        cont = self.new_label("cont")
        self.finish(Jump(cont))
        self.start_block(cont)
        return Var(dest) if dest else None


def lower(typed: TypedProgram) -> IRProgram:
    procs: dict[str, Proc] = {}
    entry_key = proc_key(typed.entry_package, typed.entry_name)
    for unit in typed.linked.units:
        for decl in unit.decls:
            if isinstance(decl, ast.OperationDecl):
                proc = _ProcLowerer(typed, unit, decl).lower()
                procs[proc.name] = proc
    if entry_key not in procs:
        raise QTypeError(f"entry operation {typed.entry_name!r} not found")
    entry_ret = procs[entry_key].ret_type
    return IRProgram(procs, entry_key, entry_ret)
