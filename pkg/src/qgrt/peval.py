"""Partial execution: constant propagation, branch folding, loop unrolling,
and per-call-site procedure cloning over the CFG.

The evaluator specializes (proc, block, environment) triples. Constant
branches are folded; a branch on a measurement-dependent value forks the
whole continuation, so each residual path carries exact constants (this is
what turns measurement-fed classical feedback into a branch tree of quantum
ops with literal parameters). A loop whose condition stays constant unrolls;
a loop with a dynamic condition is re-specialized with its loop-carried
variables generalized to registers and survives as residual branches.

Dynamic `double` values are carried in 16.16 fixed point, since the target
has integer registers only; only +, -, negation, comparison, and scaling by
an integer are representable dynamically.
"""
from __future__ import annotations

import sys

from .errors import (DivisionByZero, QTypeError, StepBudgetExceeded, TooManyQubits,
                     Unsupported)
from .frontend.types import BOOL, INT, TIME, TIMER
from .ir import (Alloc, BasicBlock, Call, CondBr, Compute, Const, Free, IRProgram,
                 IRTiming, Jump, Kill, Measure, Proc, QOp, QubitRef, Ret, SetIndex,
                 Sync, TimerReset, TimerTok, VArray, VTuple, Var, successors, wrap32)

DEFAULT_STEP_BUDGET = 10 ** 6
FIX_SCALE = 1 << 16

sys.setrecursionlimit(40000)


class Dyn:
    """A runtime register value. repr is 'int' (ints, bools, 0/1) or 'fix16'."""
    __slots__ = ("reg", "repr")

    def __init__(self, reg: str, repr_: str = "int"):
        self.reg = reg
        self.repr = repr_

    def __repr__(self) -> str:
        return f"Dyn({self.reg}:{self.repr})"


class _NeedsGeneralization(Exception):
    pass


def _tree_vars(v, out: set) -> None:
    if isinstance(v, Var):
        out.add(v.name)
    elif isinstance(v, (VTuple, VArray)):
        for i in v.items:
            _tree_vars(i, out)


def _instr_uses_defs(ins) -> tuple[set, set]:
    uses: set = set()
    defs: set = set()

    def use(ops):
        for o in ops:
            if isinstance(o, Var):
                uses.add(o.name)

    def use_timing(t):
        if t is None:
            return
        for tok, _, e in t.constraints:
            use([tok, e])
        use(t.resets)

    if isinstance(ins, Compute):
        use(ins.args)
        defs.add(ins.dest)
    elif isinstance(ins, SetIndex):
        use([ins.array, ins.index, ins.value])
    elif isinstance(ins, QOp):
        use(ins.qubits)
        use(ins.params)
        use_timing(ins.timing)
    elif isinstance(ins, Measure):
        use([ins.qubit])
        use_timing(ins.timing)
        if ins.dest is not None:
            defs.add(ins.dest)
    elif isinstance(ins, TimerReset):
        # a reset declares on first sight and re-reads afterwards
        use(ins.timers)
        defs.update(t.name for t in ins.timers if isinstance(t, Var))
    elif isinstance(ins, Sync):
        use_timing(ins.timing)
    elif isinstance(ins, Alloc):
        defs.update(ins.names)
    elif isinstance(ins, Free):
        uses.update(ins.names)
    elif isinstance(ins, Call):
        use(ins.args)
        if ins.dest is not None:
            defs.add(ins.dest)
    return uses, defs


def compute_liveness(proc: Proc) -> dict:
    """Live-in variable sets per block (classic backward fixpoint)."""
    gen: dict[str, set] = {}
    kill: dict[str, set] = {}
    for label, block in proc.blocks.items():
        g: set = set()
        k: set = set()
        for ins in block.instrs:
            uses, defs = _instr_uses_defs(ins)
            g.update(uses - k)
            k.update(defs)
        t = block.term
        term_uses: set = set()
        if isinstance(t, CondBr):
            term_uses = {o.name for o in (t.lhs, t.rhs) if isinstance(o, Var)}
        elif isinstance(t, Ret) and t.value is not None:
            _tree_vars(t.value, term_uses)
        g.update(term_uses - k)
        gen[label], kill[label] = g, k
    live_in = {label: set(gen[label]) for label in proc.blocks}
    changed = True
    while changed:
        changed = False
        for label, block in proc.blocks.items():
            out: set = set()
            for s in successors(block.term):
                out.update(live_in[s])
            new = gen[label] | (out - kill[label])
            if new != live_in[label]:
                live_in[label] = new
                changed = True
    return {label: frozenset(s) for label, s in live_in.items()}


def _round_half(x: float) -> int:
    return int(x + 0.5) if x >= 0 else -int(-x + 0.5)


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def copy_value(v):
    if isinstance(v, list):
        return [copy_value(x) for x in v]
    if isinstance(v, tuple):
        return tuple(copy_value(x) for x in v)
    return v


def freeze_value(v):
    if isinstance(v, list):
        return ("arr",) + tuple(freeze_value(x) for x in v)
    if isinstance(v, tuple):
        return ("tup",) + tuple(freeze_value(x) for x in v)
    if isinstance(v, Dyn):
        return ("dyn", v.reg, v.repr)
    return ("c", type(v).__name__, v)


def _has_dyn(v) -> bool:
    if isinstance(v, Dyn):
        return True
    if isinstance(v, (list, tuple)):
        return any(_has_dyn(x) for x in v)
    return False


def fold(op: str, vals: list, rtype) -> object:
    a = vals[0]
    b = vals[1] if len(vals) > 1 else None
    is_int = rtype == INT
    if op == "add":
        r = a + b
    elif op == "sub":
        r = a - b
    elif op == "mul":
        r = a * b
    elif op == "div":
        if (isinstance(b, int) and b == 0) or (isinstance(b, float) and b == 0.0):
            raise DivisionByZero("division by zero in compile-time evaluation")
        if is_int:
            return wrap32(_trunc_div(a, b))
        r = a / b
    elif op == "mod":
        if b == 0:
            raise DivisionByZero("modulo by zero in compile-time evaluation")
        return wrap32(a - _trunc_div(a, b) * b)
    elif op == "neg":
        r = -a
    elif op == "and":
        return bool(a) and bool(b)
    elif op == "or":
        return bool(a) or bool(b)
    elif op == "xor":
        return bool(a) != bool(b)
    elif op == "bnot":
        return not a
    elif op == "tod":
        return float(a)
    elif op == "eq":
        return a == b
    elif op == "ne":
        return a != b
    elif op == "lt":
        return a < b
    elif op == "le":
        return a <= b
    elif op == "gt":
        return a > b
    elif op == "ge":
        return a >= b
    elif op == "len":
        return len(a)
    elif op == "index":
        if not (0 <= b < len(a)):
            raise Unsupported(f"array index {b} out of range for length {len(a)}")
        return a[b]
    elif op == "mkarr":
        return list(vals)
    elif op == "mktup":
        return tuple(vals)
    else:
        raise AssertionError(f"unknown op {op}")
    if rtype == TIME:
        return _round_half(r) if isinstance(r, float) else r
    if is_int:
        return wrap32(int(r))
    return r


class PartialExecutor:
    def __init__(self, program: IRProgram, config, step_budget: int = DEFAULT_STEP_BUDGET):
        self.program = program
        self.config = config
        self.budget = step_budget
        self.out = Proc("main", [], program.ret_type)
        self.memo: dict = {}
        self.reg_n = 0
        self.label_n = 0
        self.timer_n = 0
        self.max_qubits = 0
        self._live: dict = {}

    def live_in(self, proc_name: str, label: str) -> frozenset:
        if proc_name not in self._live:
            self._live[proc_name] = compute_liveness(self.program.procs[proc_name])
        return self._live[proc_name][label]

    # -- small helpers ----------------------------------------------------------

    def fresh_reg(self, repr_: str = "int") -> Dyn:
        self.reg_n += 1
        return Dyn(f"%{self.reg_n}", repr_)

    def fresh_label(self, hint: str) -> str:
        self.label_n += 1
        return f"{hint}_{self.label_n}"

    def spend(self, n: int = 1) -> None:
        self.budget -= n
        if self.budget < 0:
            raise StepBudgetExceeded(
                "compile-time evaluation exceeded the step budget "
                "(non-terminating kernel, or raise --step-budget)")

    def canon_reg(self, header_key: str, var: str) -> str:
        return f"%L.{header_key}.{var}"

    # -- operand emission forms ----------------------------------------------------

    def emit_const(self, v, repr_: str = "int") -> Const:
        if repr_ == "fix16":
            return Const(wrap32(_round_half(float(v) * FIX_SCALE)), INT)
        if isinstance(v, bool):
            return Const(int(v), INT)
        if isinstance(v, int):
            return Const(v, INT)
        raise Unsupported(f"value {v!r} has no runtime register form")

    def emit_operand(self, v, want_repr: str | None = None):
        if isinstance(v, Dyn):
            return Var(v.reg)
        return self.emit_const(v, want_repr or ("fix16" if isinstance(v, float) else "int"))

    # -- environment/key plumbing -----------------------------------------------------

    def freeze_env(self, env: dict) -> tuple:
        return tuple(sorted((k, freeze_value(v)) for k, v in env.items()))

    def freeze_stack(self, stack: tuple) -> tuple:
        return tuple((f.proc, f.cont, f.dest, self.freeze_env(f.env)) for f in stack)

    def key_of(self, proc: str, label: str, env: dict, used: frozenset, stack: tuple):
        return (proc, label, self.freeze_env(env), used, self.freeze_stack(stack))

    # -- main specialization ------------------------------------------------------------

    def run(self) -> IRProgram:
        entry_proc = self.program.entry()
        if entry_proc.params:
            raise QTypeError("entry operation must take no parameters")
        entry_label = self.specialize(entry_proc.name, entry_proc.entry, {},
                                      frozenset(), ())
        self.out.entry = entry_label
        residual = IRProgram({"main": self.out}, "main", self.program.ret_type,
                             qubit_count=self.max_qubits)
        from .ir import drop_unreachable, merge_straight_jumps
        merge_straight_jumps(self.out)
        drop_unreachable(self.out)
        return residual

    def specialize(self, proc_name: str, label: str, env: dict,
                   used: frozenset, stack: tuple) -> str:
        key = self.key_of(proc_name, label, env, used, stack)
        if key in self.memo:
            return self.memo[key]
        res_label = self.fresh_label(label)
        self.memo[key] = res_label
        block = self.out.add_block(res_label)
        try:
            self._walk(proc_name, label, dict(env), set(used), stack, block)
        except _NeedsGeneralization:
            # loop with a dynamic condition: rebuild as a pre-header that
            # materializes loop-carried values into canonical registers;
            # the canonical names must be stable across back-edge re-entries
            block.instrs.clear()
            proc = self.program.procs[proc_name]
            assigned = proc.loop_headers[label]
            header_key = f"{proc_name}.{label}.d{len(stack)}"
            gen_env = dict(env)
            carried = set()
            for var in sorted(assigned):
                if var not in env:
                    continue
                v = env[var]
                if isinstance(v, (list, tuple)):
                    raise Unsupported(
                        f"{var!r}: arrays/tuples assigned in a measurement-dependent "
                        "loop cannot live in registers")
                if isinstance(v, (QubitRef, TimerTok)):
                    continue
                canon = self.canon_reg(header_key, var)
                carried.add(canon)
                if isinstance(v, Dyn):
                    if v.reg != canon:
                        block.instrs.append(Compute(canon, "copy", [Var(v.reg)], None))
                    gen_env[var] = Dyn(canon, v.repr)
                else:
                    repr_ = "fix16" if isinstance(v, float) else "int"
                    block.instrs.append(Compute(canon, "copy", [self.emit_const(v, repr_)], None))
                    gen_env[var] = Dyn(canon, repr_)
            target = self.specialize_generalized(proc_name, label, gen_env, used, stack)
            block.term = Jump(target)
            if carried:
                # re-running the optimizer must re-generalize this loop
                prev = self.out.loop_headers.get(target, frozenset())
                self.out.loop_headers[target] = prev | frozenset(carried)
        return res_label

    def specialize_generalized(self, proc_name: str, label: str, env: dict,
                               used: frozenset, stack: tuple) -> str:
        """Specialize a loop header whose carried variables are canonical; a
        back edge rebuilds the same canonical env and lands on the memo."""
        key = self.key_of(proc_name, label, env, frozenset(used), stack) + ("gen",)
        if key in self.memo:
            return self.memo[key]
        res_label = self.fresh_label(label)
        self.memo[key] = res_label
        block = self.out.add_block(res_label)
        try:
            self._walk(proc_name, label, dict(env), set(used), stack, block,
                       allow_dynamic_loop=True)
        except _NeedsGeneralization:
            raise AssertionError("generalized header still not stable")
        return res_label

    # -- the block walk --------------------------------------------------------

    def _walk(self, proc_name: str, label: str, env: dict, used: set,
              stack: tuple, block: BasicBlock, allow_dynamic_loop: bool = False) -> None:
        proc = self.program.procs[proc_name]
        src = proc.blocks[label]
        is_header = label in proc.loop_headers

        for ins in src.instrs:
            self.spend()
            if isinstance(ins, Compute):
                self._do_compute(ins, env, block)
            elif isinstance(ins, SetIndex):
                arr = self._ev(ins.array, env)
                idx = self._ev(ins.index, env)
                value = self._ev(ins.value, env)
                if isinstance(idx, Dyn):
                    raise Unsupported("dynamic array index on the control processor")
                if not (0 <= idx < len(arr)):
                    raise Unsupported(f"array index {idx} out of range")
                arr[idx] = value
            elif isinstance(ins, QOp):
                block.instrs.append(self._do_qop(ins, env))
            elif isinstance(ins, Measure):
                q = self._qubit(ins.qubit, env)
                dest_reg = None
                if ins.dest is not None:
                    d = self.fresh_reg()
                    env[ins.dest] = d
                    dest_reg = d.reg
                block.instrs.append(
                    Measure(dest_reg, Const(q, None), self._timing(ins.timing, env)))
            elif isinstance(ins, TimerReset):
                toks = []
                for t in ins.timers:
                    if isinstance(t, Const):
                        toks.append(t)
                        continue
                    v = env.get(t.name)
                    if not isinstance(v, TimerTok):
                        self.timer_n += 1
                        v = TimerTok(f"tmr{self.timer_n}")
                        env[t.name] = v
                    toks.append(Const(v, TIMER))
                block.instrs.append(TimerReset(toks))
            elif isinstance(ins, Sync):
                block.instrs.append(Sync(self._timing(ins.timing, env)))
            elif isinstance(ins, Alloc):
                if ins.indices is not None:
                    used.update(ins.indices)
                    if ins.indices:
                        self.max_qubits = max(self.max_qubits, max(ins.indices) + 1)
                    block.instrs.append(Alloc([], list(ins.indices)))
                    continue
                indices = []
                for name in ins.names:
                    idx = 0
                    while idx in used:
                        idx += 1
                    if idx >= self.config.qubit_count:
                        raise TooManyQubits(
                            f"kernel needs more than the platform's "
                            f"{self.config.qubit_count} qubit(s)")
                    used.add(idx)
                    indices.append(idx)
                    env[name] = QubitRef(idx)
                    self.max_qubits = max(self.max_qubits, idx + 1)
                block.instrs.append(Alloc([], indices))
            elif isinstance(ins, Free):
                if ins.indices is not None:
                    indices = list(ins.indices)
                else:
                    indices = [env[name].index for name in ins.names]
                used.difference_update(indices)
                block.instrs.append(Free([], indices))
            elif isinstance(ins, Kill):
                for name in ins.names:
                    env.pop(name, None)
            elif isinstance(ins, Call):
                cont = src.term.target
                cont_live = self.live_in(proc_name, cont)
                frame_env = {k: v for k, v in env.items()
                             if k in cont_live and k != ins.dest}
                frame = _Frame(proc_name, cont, ins.dest, frame_env)
                callee = self.program.procs[ins.name]
                callee_env = {}
                for (pname, _), arg in zip(callee.params, ins.args):
                    callee_env[pname] = self._ev(arg, env)
                target = self.specialize(ins.name, callee.entry, callee_env,
                                         frozenset(used), stack + (frame,))
                block.term = Jump(target)
                return
            else:
                raise AssertionError(f"unhandled instruction {ins!r}")

        term = src.term
        self.spend()
        if isinstance(term, Jump):
            block.term = Jump(self._goto(proc_name, term.target, env, used, stack))
            return
        if isinstance(term, CondBr):
            lhs = self._ev(term.lhs, env)
            rhs = self._ev(term.rhs, env)
            if not isinstance(lhs, Dyn) and not isinstance(rhs, Dyn):
                taken = fold(term.cmp, [_as_number(lhs), _as_number(rhs)], BOOL)
                target = term.then_label if taken else term.else_label
                block.term = Jump(self._goto(proc_name, target, env, used, stack))
                return
            if is_header and not allow_dynamic_loop:
                raise _NeedsGeneralization()
            want = _pair_repr(lhs, rhs)
            lo = self.emit_operand(lhs, want)
            ro = self.emit_operand(rhs, want)
            then_l = self._goto(proc_name, term.then_label, env, used, stack)
            else_l = self._goto(proc_name, term.else_label, env, used, stack)
            block.term = CondBr(term.cmp, lo, ro, then_l, else_l)
            return
        if isinstance(term, Ret):
            value = None if term.value is None else self._ev_tree(term.value, env)
            if not stack:
                block.term = Ret(self._tree(value))
                return
            frame = stack[-1]
            resumed = dict(frame.env)
            if frame.dest is not None:
                resumed[frame.dest] = value
            target = self.specialize(frame.proc, frame.cont, resumed,
                                     frozenset(used), stack[:-1])
            block.term = Jump(target)
            return
        raise AssertionError(f"unhandled terminator {term!r}")

    def _goto(self, proc_name: str, label: str, env: dict, used: set, stack: tuple) -> str:
        succ_env = self._succ_env(proc_name, label, env)
        return self.specialize(proc_name, label, succ_env, frozenset(used), stack)

    def _succ_env(self, proc_name: str, label: str, env: dict) -> dict:
        live = self.live_in(proc_name, label)
        return {k: copy_value(v) for k, v in env.items() if k in live}

    # -- instruction evaluation ------------------------------------------------------

    def _ev(self, operand, env):
        if isinstance(operand, Var):
            if operand.name not in env:
                raise QTypeError(
                    "operation can fall off the end without returning a value"
                    if operand.name == "__missing__"
                    else f"internal: unbound slot {operand.name}")
            return env[operand.name]
        return operand.value

    def _ev_tree(self, v, env):
        if isinstance(v, VTuple):
            return tuple(self._ev_tree(i, env) for i in v.items)
        if isinstance(v, VArray):
            return [self._ev_tree(i, env) for i in v.items]
        return self._ev(v, env)

    def _qubit(self, operand, env) -> QubitRef:
        v = self._ev(operand, env)
        if not isinstance(v, QubitRef):
            raise AssertionError(f"expected a qubit, got {v!r}")
        return v

    def _do_compute(self, ins: Compute, env: dict, block: BasicBlock) -> None:
        vals = [self._ev(a, env) for a in ins.args]
        if ins.op == "copy":
            env[ins.dest] = vals[0]
            return
        if not any(_has_dyn(v) for v in vals):
            env[ins.dest] = fold(ins.op, [_as_number(v) if not isinstance(v, (list, tuple))
                                          else v for v in vals], ins.rtype)
            return
        # dynamic path
        op = ins.op
        if op in ("mkarr", "mktup"):
            env[ins.dest] = list(vals) if op == "mkarr" else tuple(vals)
            return
        if op == "len":
            env[ins.dest] = len(vals[0])
            return
        if op == "index":
            if isinstance(vals[1], Dyn):
                raise Unsupported("dynamic array index on the control processor")
            if not (0 <= vals[1] < len(vals[0])):
                raise Unsupported(f"array index {vals[1]} out of range")
            env[ins.dest] = vals[0][vals[1]]
            return
        if op in ("div", "mod"):
            raise Unsupported(
                "measurement-dependent division is not representable on the "
                "control processor")
        if op == "tod":
            a = vals[0]
            d = self.fresh_reg("fix16")
            block.instrs.append(
                Compute(d.reg, "mul", [self.emit_operand(a), Const(FIX_SCALE, INT)], INT))
            env[ins.dest] = d
            return
        reprs = [v.repr if isinstance(v, Dyn) else ("fix16" if isinstance(v, float) else "int")
                 for v in vals]
        if op in ("eq", "ne", "lt", "le", "gt", "ge"):
            want = _pair_repr(*vals) if len(vals) == 2 else reprs[0]
            d = self.fresh_reg()
            block.instrs.append(
                Compute(d.reg, op, [self.emit_operand(v, want) for v in vals], BOOL))
            env[ins.dest] = d
            return
        if op == "mul" and reprs.count("fix16") == 2:
            raise Unsupported(
                "measurement-dependent double multiplication is not representable "
                "in 16.16 fixed point on the control processor")
        if op in ("add", "sub", "neg"):
            want = _pair_repr(*vals) if len(vals) == 2 else reprs[0]
            out_repr = want
        elif op == "mul":
            want = None  # each side keeps its own repr; int x fix16 is exact
            out_repr = "fix16" if "fix16" in reprs else "int"
        elif op in ("and", "or", "xor", "bnot"):
            want = "int"
            out_repr = "int"
        else:
            raise AssertionError(f"unhandled dynamic op {op}")
        d = self.fresh_reg(out_repr)
        args = [self.emit_operand(v, want if want else r) for v, r in zip(vals, reprs)]
        block.instrs.append(Compute(d.reg, op, args, ins.rtype))
        env[ins.dest] = d

    def _do_qop(self, ins: QOp, env: dict) -> QOp:
        qubits = [Const(self._qubit(q, env), None) for q in ins.qubits]
        params = []
        for p in ins.params:
            v = self._ev(p, env)
            if _has_dyn(v):
                raise Unsupported(
                    f"quantum operation {ins.name!r} has a measurement-dependent "
                    "parameter; restructure so each branch carries a constant")
            params.append(Const(_as_number(v), None))
        return QOp(ins.name, ins.mods, qubits, params, self._timing(ins.timing, env))

    def _timing(self, timing: IRTiming | None, env: dict) -> IRTiming | None:
        if timing is None:
            return None
        constraints = []
        for t, cmp, e in timing.constraints:
            tok = self._ev(t, env)
            value = self._ev(e, env)
            if _has_dyn(value):
                raise Unsupported(
                    "timing constraints must be compile-time constants after "
                    "partial execution")
            constraints.append((Const(tok, TIMER), cmp, Const(int(value), TIME)))
        resets = tuple(Const(self._ev(r, env), TIMER) for r in timing.resets)
        return IRTiming(tuple(constraints), resets)

    def _tree(self, v):
        if v is None:
            return None
        if isinstance(v, Dyn):
            return Var(v.reg)
        if isinstance(v, list):
            return VArray(tuple(self._tree(x) for x in v))
        if isinstance(v, tuple):
            return VTuple(tuple(self._tree(x) for x in v))
        return Const(v, None)


class _Frame:
    __slots__ = ("proc", "cont", "dest", "env")

    def __init__(self, proc: str, cont: str, dest: str | None, env: dict):
        self.proc = proc
        self.cont = cont
        self.dest = dest
        self.env = env


def _as_number(v):
    if isinstance(v, bool):
        return v
    return v


def _pair_repr(a, b=None) -> str:
    def r(v):
        if isinstance(v, Dyn):
            return v.repr
        return "fix16" if isinstance(v, float) else "int"
    if b is None:
        return r(a)
    return "fix16" if "fix16" in (r(a), r(b)) else "int"


def partially_execute(program: IRProgram, config,
                      step_budget: int = DEFAULT_STEP_BUDGET) -> IRProgram:
    return PartialExecutor(program, config, step_budget).run()
