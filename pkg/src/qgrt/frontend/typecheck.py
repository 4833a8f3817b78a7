"""Static type checker.

Annotates every expression with its type in place and resolves call sites
against the linked namespace and the platform config. Timing annotations are
only legal on calls whose callee is (transitively) quantum.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import ArityError, QTypeError, Span, TimingOnClassical
from ..platform import MeasureSem, Pulse, Reset, PlatformConfig
from . import ast
from .linker import LinkedProgram
from .types import (ArrayT, BOOL, DOUBLE, INT, OpT, QType, QUBIT, TIME, TIMER,
                    TupleT, UNIT, contains_kind, is_classical, type_text)

PI = 3.141592653589793

_NUMERIC = (INT, DOUBLE)


@dataclass
class TypedProgram:
    linked: LinkedProgram
    config: PlatformConfig
    quantum_ops: set[int]          # id() of OperationDecl nodes that touch qubits
    entry_package: str = ""
    entry_name: str = "main"

    def entry_decl(self) -> ast.OperationDecl:
        return self.linked.decl_index[(self.entry_package, self.entry_name)]


@dataclass
class _Binding:
    kind: str          # var | qubit | timer | const
    qtype: QType


class _Scope:
    def __init__(self, parent: "_Scope | None" = None):
        self.parent = parent
        self.names: dict[str, _Binding] = {}

    def declare(self, name: str, binding: _Binding, span: Span) -> None:
        if name in self.names:
            raise QTypeError(f"{name!r} is already declared in this scope", span)
        self.names[name] = binding

    def lookup(self, name: str) -> _Binding | None:
        scope: _Scope | None = self
        while scope is not None:
            if name in scope.names:
                return scope.names[name]
            scope = scope.parent
        return None


def _assignable(src: QType, dst: QType) -> bool:
    if src == dst:
        return True
    return src == INT and dst == DOUBLE  # the only implicit conversion


class TypeChecker:
    def __init__(self, linked: LinkedProgram, config: PlatformConfig):
        self.linked = linked
        self.config = config
        self.quantum_ops: set[int] = set()

    # -- driver ---------------------------------------------------------------

    def check(self) -> TypedProgram:
        for unit in self.linked.units:
            for decl in unit.decls:
                if isinstance(decl, ast.OpaqueDecl):
                    self._check_opaque(decl)
        self._compute_quantum()
        for unit in self.linked.units:
            for decl in unit.decls:
                if isinstance(decl, ast.OperationDecl):
                    self._check_operation(unit, decl)
        return TypedProgram(self.linked, self.config, self.quantum_ops)

    # -- declarations -----------------------------------------------------------

    def _check_opaque(self, decl: ast.OpaqueDecl) -> None:
        opdef = self.config.operations.get(decl.name)
        if opdef is None:
            raise QTypeError(
                f"opaque operation {decl.name!r} has no definition in platform config "
                f"{self.config.package_name!r}", decl.span)
        qubit_params = [p for p in decl.params if p.qtype == QUBIT]
        classical = [p for p in decl.params if p.qtype != QUBIT]
        if len(qubit_params) != opdef.num_qubits:
            raise QTypeError(
                f"opaque {decl.name!r} declares {len(qubit_params)} qubit parameter(s), "
                f"config says {opdef.num_qubits}", decl.span)
        if [(p.name, p.qtype) for p in classical] != list(opdef.params):
            raise QTypeError(
                f"opaque {decl.name!r} classical parameters do not match the config "
                f"({[(n, type_text(t)) for n, t in opdef.params]})", decl.span)
        for p in classical:
            if p.qtype in (TIMER, QUBIT) or not is_classical(p.qtype):
                raise QTypeError(f"opaque parameter {p.name!r} must be classical", p.span)
        want_ret = BOOL if isinstance(opdef.semantics, MeasureSem) else UNIT
        if decl.ret != want_ret:
            raise QTypeError(
                f"opaque {decl.name!r} must return {type_text(want_ret)}", decl.span)

    def _compute_quantum(self) -> None:
        # opaque ops are quantum by definition; user ops by call-graph fixpoint
        changed = True
        while changed:
            changed = False
            for unit in self.linked.units:
                for decl in unit.decls:
                    if not isinstance(decl, ast.OperationDecl) or id(decl) in self.quantum_ops:
                        continue
                    if self._body_is_quantum(unit, decl.body):
                        self.quantum_ops.add(id(decl))
                        changed = True

    def _body_is_quantum(self, unit: ast.SourceUnit, node) -> bool:
        for n in ast.walk(node):
            if isinstance(n, ast.Using):
                return True
            if isinstance(n, ast.Call) and isinstance(n.callee, ast.Ident):
                target = unit.visible.get(n.callee.name)
                if target is not None:
                    decl = target[1]
                    if isinstance(decl, ast.OpaqueDecl) or id(decl) in self.quantum_ops:
                        return True
            if isinstance(n, ast.Modifier):
                return True
        return False

    def _check_operation(self, unit: ast.SourceUnit, decl: ast.OperationDecl) -> None:
        if contains_kind(decl.ret, "timer"):
            raise QTypeError("operations may not return timers", decl.span)
        if isinstance(decl.ret, ArrayT) and contains_kind(decl.ret, "qubit"):
            raise QTypeError("operations may not return qubit arrays", decl.span)
        scope = _Scope()
        scope.declare("PI", _Binding("const", DOUBLE), decl.span)
        for p in decl.params:
            if p.qtype == TIMER:
                raise QTypeError("timer parameters are not allowed", p.span)
            kind = "qubit" if p.qtype == QUBIT else "var"
            scope.declare(p.name, _Binding(kind, p.qtype), p.span)
        ctx = _OpContext(unit, decl, self)
        ctx.check_block(decl.body, scope, qubits_in_use=sum(p.qtype == QUBIT for p in decl.params))


@dataclass
class _OpContext:
    unit: ast.SourceUnit
    decl: ast.OperationDecl
    tc: TypeChecker
    loop_depth: int = 0

    # -- statements ---------------------------------------------------------

    def check_block(self, block: ast.Block, scope: _Scope, qubits_in_use: int) -> None:
        inner = _Scope(scope)
        for stmt in block.stmts:
            self.check_stmt(stmt, inner, qubits_in_use)

    def check_stmt(self, stmt: ast.Stmt, scope: _Scope, qubits_in_use: int) -> None:
        if isinstance(stmt, ast.VarDecl):
            t = stmt.decl_type
            if contains_kind(t, "qubit"):
                raise QTypeError("qubit variables are bound by using blocks only", stmt.span)
            if t == UNIT:
                raise QTypeError("cannot declare a unit variable", stmt.span)
            for d in stmt.declarators:
                if t == TIMER:
                    if d.init is not None:
                        raise QTypeError("timers cannot be initialized", d.span)
                    scope.declare(d.name, _Binding("timer", TIMER), d.span)
                    continue
                if d.init is None:
                    raise QTypeError(f"{d.name!r} needs an initializer", d.span)
                it = self.check_expr(d.init, scope, expected=t)
                if not _assignable(it, t):
                    raise QTypeError(
                        f"cannot initialize {type_text(t)} from {type_text(it)}", d.span)
                scope.declare(d.name, _Binding("var", t), d.span)
            return
        if isinstance(stmt, ast.Assign):
            tt = self._lvalue_type(stmt.target, scope)
            vt = self.check_expr(stmt.value, scope, expected=tt)
            if not _assignable(vt, tt):
                raise QTypeError(
                    f"cannot assign {type_text(vt)} to {type_text(tt)}", stmt.span)
            return
        if isinstance(stmt, ast.If):
            ct = self.check_expr(stmt.cond, scope)
            if ct != BOOL:
                raise QTypeError(f"if condition must be bool, got {type_text(ct)}", stmt.span)
            self.check_block(stmt.then, scope, qubits_in_use)
            if stmt.els is not None:
                self.check_block(stmt.els, scope, qubits_in_use)
            return
        if isinstance(stmt, ast.While):
            ct = self.check_expr(stmt.cond, scope)
            if ct != BOOL:
                raise QTypeError(f"while condition must be bool, got {type_text(ct)}", stmt.span)
            self.loop_depth += 1
            self.check_block(stmt.body, scope, qubits_in_use)
            self.loop_depth -= 1
            return
        if isinstance(stmt, (ast.Break, ast.Continue)):
            if self.loop_depth == 0:
                raise QTypeError("break/continue outside a loop", stmt.span)
            return
        if isinstance(stmt, ast.Return):
            want = self.decl.ret
            if stmt.value is None:
                if want != UNIT:
                    raise QTypeError(f"return value of type {type_text(want)} required", stmt.span)
                return
            vt = self.check_expr(stmt.value, scope, expected=want)
            if not _assignable(vt, want):
                raise QTypeError(
                    f"returning {type_text(vt)} from operation of type {type_text(want)}",
                    stmt.span)
            return
        if isinstance(stmt, ast.Using):
            total = qubits_in_use + len(stmt.bindings)
            if total > self.tc.config.qubit_count:
                raise QTypeError(
                    f"using block needs {total} concurrent qubits, platform has "
                    f"{self.tc.config.qubit_count}", stmt.span)
            inner = _Scope(scope)
            for b in stmt.bindings:
                inner.declare(b.name, _Binding("qubit", QUBIT), b.span)
            self.check_block(stmt.body, inner, total)
            return
        if isinstance(stmt, ast.ExprStmt):
            self.check_expr(stmt.expr, scope)
            if stmt.timing is not None:
                self._check_timing(stmt, scope)
            return
        raise AssertionError(f"unchecked statement {stmt!r}")

    def _check_timing(self, stmt: ast.ExprStmt, scope: _Scope) -> None:
        timing = stmt.timing
        call = stmt.expr
        if not isinstance(call, ast.Call) or not self._callee_is_quantum(call):
            raise TimingOnClassical(
                "timing annotations may only be associated with quantum operations", timing.span)
        for c in timing.constraints:
            b = scope.lookup(c.timer)
            if b is None:
                raise QTypeError(f"unknown timer {c.timer!r}", c.span)
            if b.kind != "timer":
                raise TimingOnClassical(
                    f"{c.timer!r} is {type_text(b.qtype)}; timing constraints compare timers",
                    c.span)
            et = self.check_expr(c.time_expr, scope)
            if et != TIME:
                raise QTypeError(
                    f"timer compares against a time value, got {type_text(et)}", c.span)
        for name in timing.resets:
            b = scope.lookup(name)
            if b is None or b.kind != "timer":
                raise QTypeError(f"reset list names a non-timer {name!r}", timing.span)

    def _callee_is_quantum(self, call: ast.Call) -> bool:
        if isinstance(call.callee, ast.Modifier):
            return True
        decl = getattr(call.callee, "resolved", None)
        if isinstance(decl, ast.OpaqueDecl):
            return True
        return isinstance(decl, ast.OperationDecl) and id(decl) in self.tc.quantum_ops

    def _lvalue_type(self, target: ast.Expr, scope: _Scope) -> QType:
        if isinstance(target, ast.Ident):
            b = scope.lookup(target.name)
            if b is None:
                raise QTypeError(f"unknown variable {target.name!r}", target.span)
            if b.kind != "var":
                raise QTypeError(f"cannot assign to {b.kind} {target.name!r}", target.span)
            target.qtype = b.qtype
            return b.qtype
        if isinstance(target, ast.Index):
            at = self.check_expr(target.array, scope)
            if not isinstance(at, ArrayT):
                raise QTypeError(f"indexing a non-array {type_text(at)}", target.span)
            it = self.check_expr(target.index, scope)
            if it != INT:
                raise QTypeError("array index must be int", target.span)
            target.qtype = at.elem
            return at.elem
        raise QTypeError("assignment target must be a variable or array element", target.span)

    # -- expressions ----------------------------------------------------------

    def check_expr(self, e: ast.Expr, scope: _Scope, expected: QType | None = None) -> QType:
        t = self._infer(e, scope, expected)
        e.qtype = t
        return t

    def _infer(self, e: ast.Expr, scope: _Scope, expected: QType | None) -> QType:
        if isinstance(e, ast.IntLit):
            return INT
        if isinstance(e, ast.DoubleLit):
            return DOUBLE
        if isinstance(e, ast.BoolLit):
            return BOOL
        if isinstance(e, ast.TimeLit):
            return TIME
        if isinstance(e, ast.Ident):
            b = scope.lookup(e.name)
            if b is not None:
                if b.kind == "timer":
                    raise QTypeError("timers can only be read inside timing constraints", e.span)
                return b.qtype
            target = self.unit.visible.get(e.name)
            if target is not None:
                raise QTypeError(f"operation {e.name!r} used as a value", e.span)
            raise QTypeError(f"unknown identifier {e.name!r}", e.span)
        if isinstance(e, ast.BinOp):
            return self._infer_binop(e, scope)
        if isinstance(e, ast.UnOp):
            ot = self.check_expr(e.operand, scope)
            if e.op == "!":
                if ot != BOOL:
                    raise QTypeError(f"! needs bool, got {type_text(ot)}", e.span)
                return BOOL
            if ot not in (INT, DOUBLE, TIME):
                raise QTypeError(f"unary - needs a numeric type, got {type_text(ot)}", e.span)
            return ot
        if isinstance(e, ast.Call):
            return self._infer_call(e, scope)
        if isinstance(e, ast.Modifier):
            raise QTypeError("a control/invert expression must be called", e.span)
        if isinstance(e, ast.Index):
            at = self.check_expr(e.array, scope)
            if not isinstance(at, ArrayT):
                raise QTypeError(f"indexing a non-array {type_text(at)}", e.span)
            it = self.check_expr(e.index, scope)
            if it != INT:
                raise QTypeError("array index must be int", e.span)
            return at.elem
        if isinstance(e, ast.Length):
            at = self.check_expr(e.array, scope)
            if not isinstance(at, ArrayT):
                raise QTypeError(".length needs an array", e.span)
            return INT
        if isinstance(e, ast.TupleExpr):
            elems = []
            for i, item in enumerate(e.items):
                want = None
                if isinstance(expected, TupleT) and len(expected.elems) == len(e.items):
                    want = expected.elems[i]
                it = self.check_expr(item, scope, expected=want)
                if want is not None and _assignable(it, want):
                    it = want
                elems.append(it)
            return TupleT(tuple(elems))
        if isinstance(e, ast.ArrayLit):
            want_elem = expected.elem if isinstance(expected, ArrayT) else None
            if not e.items:
                if want_elem is None:
                    raise QTypeError("cannot infer the type of an empty array literal", e.span)
                return ArrayT(want_elem)
            elem_types = [self.check_expr(item, scope, expected=want_elem) for item in e.items]
            base = want_elem if want_elem is not None else elem_types[0]
            for i, it in enumerate(elem_types):
                if not _assignable(it, base):
                    raise QTypeError(
                        f"array literal elements must have a uniform type "
                        f"({type_text(base)} vs {type_text(it)})", e.items[i].span)
            return ArrayT(base)
        if isinstance(e, ast.DurationOf):
            target = self.unit.visible.get(e.opname)
            if target is None or not isinstance(target[1], ast.OpaqueDecl):
                raise QTypeError(
                    f"duration() takes an opaque operation, {e.opname!r} is not one", e.span)
            e.resolved = target[1]
            return TIME
        raise AssertionError(f"uninferred expression {e!r}")

    def _infer_binop(self, e: ast.BinOp, scope: _Scope) -> QType:
        lt = self.check_expr(e.lhs, scope)
        rt = self.check_expr(e.rhs, scope)
        op = e.op
        if op in ("&&", "||"):
            if lt != BOOL or rt != BOOL:
                raise QTypeError(f"{op} needs bool operands", e.span)
            return BOOL
        if op in ("==", "!=", "<", "<=", ">", ">="):
            ok = (lt in _NUMERIC and rt in _NUMERIC) or (lt == rt and lt in (TIME, BOOL, INT, DOUBLE))
            if lt == BOOL and op not in ("==", "!="):
                ok = False
            if not ok:
                raise QTypeError(
                    f"cannot compare {type_text(lt)} with {type_text(rt)}", e.span)
            return BOOL
        if op in ("+", "-", "*", "/", "%"):
            if lt in _NUMERIC and rt in _NUMERIC:
                if op == "%" and (lt != INT or rt != INT):
                    raise QTypeError("% needs int operands", e.span)
                return DOUBLE if DOUBLE in (lt, rt) else INT
            if lt == TIME and rt == TIME and op in ("+", "-"):
                return TIME
            if lt == TIME and rt in _NUMERIC and op in ("*", "/"):
                return TIME
            if lt in _NUMERIC and rt == TIME and op == "*":
                return TIME
            raise QTypeError(
                f"operator {op} undefined for {type_text(lt)} and {type_text(rt)}", e.span)
        raise AssertionError(f"unknown operator {op}")

    def _infer_call(self, e: ast.Call, scope: _Scope) -> QType:
        if isinstance(e.callee, ast.Modifier):
            sig = self._check_modifier(e.callee, scope)
        elif isinstance(e.callee, ast.Ident):
            name = e.callee.name
            if scope.lookup(name) is not None:
                raise QTypeError(f"{name!r} is a variable, not an operation", e.span)
            target = self.unit.visible.get(name)
            if target is None:
                raise QTypeError(f"unknown operation {name!r}", e.span)
            decl = target[1]
            e.callee.resolved = decl
            sig = OpT(tuple(p.qtype for p in decl.params), decl.ret)
            e.callee.qtype = sig
        else:
            raise QTypeError("expression is not callable", e.span)
        if len(e.args) != len(sig.params):
            raise ArityError(
                f"call takes {len(sig.params)} argument(s), got {len(e.args)}", e.span)
        for arg, want in zip(e.args, sig.params):
            at = self.check_expr(arg, scope, expected=want)
            if not _assignable(at, want):
                raise QTypeError(
                    f"argument of type {type_text(at)} where {type_text(want)} expected",
                    arg.span)
            if want == QUBIT and not isinstance(arg, ast.Ident):
                raise QTypeError("qubit arguments must be qubit variables", arg.span)
        return sig.ret

    def _check_modifier(self, m: ast.Modifier, scope: _Scope) -> OpT:
        if not m.args:
            raise ArityError(f"{m.kind} needs arguments", m.span)
        target = m.args[-1]
        if isinstance(target, ast.Modifier):
            base = self._check_modifier(target, scope)
        elif isinstance(target, ast.Ident) and scope.lookup(target.name) is None:
            vis = self.unit.visible.get(target.name)
            if vis is None or not isinstance(vis[1], ast.OpaqueDecl):
                raise QTypeError(
                    f"{m.kind} requires an opaque operation, {target.name!r} is not one",
                    target.span)
            decl = vis[1]
            opdef = self.tc.config.operations[decl.name]
            if isinstance(opdef.semantics, (MeasureSem, Pulse, Reset)):
                raise QTypeError(
                    f"{m.kind} applies to unitary (rotation/matrix) operations only; "
                    f"{decl.name!r} has {opdef.semantics.variant} semantics", target.span)
            target.resolved = decl
            base = OpT(tuple(p.qtype for p in decl.params), decl.ret)
            target.qtype = base
        else:
            raise QTypeError(f"{m.kind} requires an opaque operation", target.span)
        ctrls = m.args[:-1]
        if m.kind == "invert":
            if ctrls:
                raise ArityError("invert takes exactly one operation", m.span)
            m.qtype = base
            return base
        if not ctrls:
            raise ArityError("control needs at least one control qubit", m.span)
        for c in ctrls:
            ct = self.check_expr(c, scope)
            if ct != QUBIT:
                raise QTypeError("control qubits must be qubit-typed", c.span)
        # control qubits are bound by the modifier; the call signature is unchanged
        m.qtype = base
        return base


def typecheck(linked: LinkedProgram, config: PlatformConfig) -> TypedProgram:
    return TypeChecker(linked, config).check()
