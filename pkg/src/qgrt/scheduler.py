"""Timing-constraint scheduling over the residual CFG.

Within a block, instruction starts are the least solution of a difference
constraint system: serial chaining (the control processor retires one
instruction at a time), timer reads as lower bounds or pins, timer resets as
write points. The least solution is found by longest-path relaxation, so
every operation gets the earliest feasible start given its predecessors, and
a positive cycle (conflicting pins) reports Infeasible.

Across blocks, timers carry their reset point only where every path agrees;
the arms of a dynamic branch are padded with trailing waits to keep carried
timers path-independent, and bindings are dropped at loop headers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import Infeasible
from .codegen import EmissionModel
from .ir import CondBr, IRProgram, Jump, Proc, successors
from .platform import PlatformConfig


@dataclass
class TimedBlock:
    starts: list            # start cycle per plan, relative to block entry
    gaps: list              # qwait inserted before each plan
    pad: int                # trailing qwait before the terminator
    body_end: int
    term_span: int
    entry_elapsed: dict     # TimerTok -> elapsed ns at block entry
    reset_pos: dict         # TimerTok -> latest reset cycle inside the block

    def total(self) -> int:
        return self.body_end + self.pad + self.term_span

    def exit_elapsed(self) -> dict:
        out = {tok: e + self.total() for tok, e in self.entry_elapsed.items()}
        for tok, pos in self.reset_pos.items():
            out[tok] = self.total() - pos
        return out


@dataclass
class TimedIR:
    program: IRProgram
    config: PlatformConfig
    classical_ns: int
    model: EmissionModel
    blocks: dict = field(default_factory=dict)
    order: list = field(default_factory=list)


def split_critical_edges(proc: Proc) -> None:
    """Insert empty blocks on branch edges into multi-predecessor blocks so
    per-path padding always has a dedicated block to live in."""
    preds: dict[str, list[str]] = {l: [] for l in proc.order}
    for label in proc.order:
        for s in successors(proc.blocks[label].term):
            preds[s].append(label)
    n = 0
    for label in list(proc.order):
        term = proc.blocks[label].term
        if not isinstance(term, CondBr):
            continue
        for attr in ("then_label", "else_label"):
            target = getattr(term, attr)
            if len(preds[target]) > 1:
                n += 1
                pad_label = f"pad_{n}_{label}"
                b = proc.add_block(pad_label)
                b.term = Jump(target)
                # keep layout near the branch for fallthrough friendliness
                proc.order.remove(pad_label)
                proc.order.insert(proc.order.index(label) + 1, pad_label)
                setattr(term, attr, pad_label)


def _rpo(proc: Proc) -> list:
    seen: set[str] = set()
    out: list[str] = []

    def dfs(label: str) -> None:
        if label in seen:
            return
        seen.add(label)
        for s in successors(proc.blocks[label].term):
            dfs(s)
        out.append(label)

    dfs(proc.entry)
    return list(reversed(out))


def _solve_block(plans: list, entry_elapsed: dict) -> tuple:
    """Least start cycles satisfying chaining and timer constraints."""
    n = len(plans)
    edges = []  # (u, v, weight, why): s_v >= s_u + weight ; node -1 is entry
    if n:
        edges.append((-1, 0, 0, "block entry"))
    for e in range(n - 1):
        edges.append((e, e + 1, plans[e].span, "instruction order"))

    def reset_source(tok, before: int):
        for j in range(before - 1, -1, -1):
            p = plans[j]
            if p.timing is not None and any(r.value == tok for r in p.timing.resets):
                return j, 0
            if p.resets_instr is not None and any(
                    t.value == tok for t in p.resets_instr.timers):
                return j, 0
        if tok in entry_elapsed:
            return -1, -entry_elapsed[tok]
        return None

    for e, p in enumerate(plans):
        if p.timing is None:
            continue
        for tok_op, cmp, t_op in p.timing.constraints:
            tok, t_ns = tok_op.value, t_op.value
            src = reset_source(tok, e)
            if src is None:
                raise Infeasible(
                    f"timer {tok.name} has no reset visible at this point "
                    "(it may not be synchronized across branches or loops)")
            base, ofs = src
            why = f"{tok.name} {cmp} {t_ns}ns"
            lo = ofs + t_ns + (1 if cmp == ">" else 0)
            edges.append((base, e, lo, why))
            if cmp == "==":
                edges.append((e, base, -(ofs + t_ns), why))

    dist = {-1: 0}
    for e in range(n):
        dist[e] = 0 if e == 0 else None
    dist[0 if n else -1] = dist.get(0, 0)
    # longest-path relaxation; |V|+1 passes to detect positive cycles
    changed_why = None
    for it in range(n + 2):
        changed_why = None
        for u, v, w, why in edges:
            du = dist.get(u)
            if du is None:
                continue
            cand = du + w
            if dist.get(v) is None or cand > dist[v]:
                dist[v] = cand
                changed_why = why
        if changed_why is None:
            break
    if changed_why is not None:
        raise Infeasible(
            f"no feasible schedule: the constraint '{changed_why}' conflicts with "
            "earlier timing requirements; modify the timing constraints")

    starts = [dist[e] for e in range(n)]
    gaps = []
    pos = 0
    for e in range(n):
        gaps.append(starts[e] - pos)
        pos = starts[e] + plans[e].span
    body_end = pos
    reset_pos: dict = {}
    for e, p in enumerate(plans):
        toks = []
        if p.timing is not None:
            toks.extend(r.value for r in p.timing.resets)
        if p.resets_instr is not None:
            toks.extend(t.value for t in p.resets_instr.timers)
        for tok in toks:
            reset_pos[tok] = starts[e]
    return starts, gaps, body_end, reset_pos


def schedule(ir: IRProgram, config: PlatformConfig, classical_ns: int = 1,
             f32_doubles: bool = False) -> TimedIR:
    proc = ir.entry()
    split_critical_edges(proc)
    model = EmissionModel(ir, config, classical_ns, f32_doubles)
    timed = TimedIR(ir, config, classical_ns, model, {}, list(model.order))
    rpo = _rpo(proc)
    preds: dict[str, list[str]] = {l: [] for l in proc.order}
    for label in proc.order:
        for s in successors(proc.blocks[label].term):
            preds[s].append(label)

    done: set[str] = set()
    for label in rpo:
        if label == proc.entry or any(p not in done for p in preds[label]):
            entry_elapsed: dict = {}   # loop header or program entry
        elif len(preds[label]) == 1:
            entry_elapsed = timed.blocks[preds[label][0]].exit_elapsed()
        else:
            entry_elapsed = _merge_preds(label, preds[label], timed)
        plans = model.plans[label]
        starts, gaps, body_end, reset_pos = _solve_block(plans, entry_elapsed)
        timed.blocks[label] = TimedBlock(
            starts, gaps, 0, body_end, model.term_plans[label].span,
            entry_elapsed, reset_pos)
        done.add(label)
    return timed


def _merge_preds(label: str, ps: list, timed: TimedIR) -> dict:
    exits = {p: timed.blocks[p].exit_elapsed() for p in ps}
    shared = set.intersection(*(set(e.keys()) for e in exits.values()))
    if not shared:
        return {}
    deltas: dict[str, int | None] = {p: None for p in ps}
    for tok in sorted(shared, key=lambda t: t.name):
        target = max(exits[p][tok] for p in ps)
        for p in ps:
            d = target - exits[p][tok]
            if deltas[p] is None:
                deltas[p] = d
            elif deltas[p] != d:
                raise Infeasible(
                    f"cannot synchronize timers at join {label!r}: paths disagree "
                    "by different amounts for different timers")
    for p in ps:
        if deltas[p]:
            timed.blocks[p].pad += deltas[p]
    return {tok: timed.blocks[ps[0]].exit_elapsed()[tok] for tok in shared}


def verify_schedule(timed: TimedIR) -> list:
    """Independent replay of the schedule; returns violations (empty = ok)."""
    violations: list[str] = []
    proc = timed.program.entry()
    preds: dict[str, list[str]] = {l: [] for l in proc.order}
    for label in proc.order:
        for s in successors(proc.blocks[label].term):
            preds[s].append(label)

    for label in timed.order:
        tb = timed.blocks[label]
        plans = timed.model.plans[label]
        # entry bindings must be consistent with every processed predecessor
        for p in preds[label]:
            if p not in timed.blocks:
                continue
            exit_b = timed.blocks[p].exit_elapsed()
            for tok, e in tb.entry_elapsed.items():
                if tok in exit_b and exit_b[tok] != e:
                    violations.append(
                        f"{label}: timer {tok.name} enters with {e} but predecessor "
                        f"{p} exits with {exit_b[tok]}")
        pos = 0
        resets = {tok: -e for tok, e in tb.entry_elapsed.items()}
        busy: dict[int, int] = {}
        for e, (s, plan) in enumerate(zip(tb.starts, plans)):
            if s < pos:
                violations.append(
                    f"{label}[{e}]: start {s} before previous instruction ends at {pos}")
            if plan.timing is not None:
                for tok_op, cmp, t_op in plan.timing.constraints:
                    tok, want = tok_op.value, t_op.value
                    if tok not in resets:
                        violations.append(f"{label}[{e}]: timer {tok.name} unbound")
                        continue
                    have = s - resets[tok]
                    ok = (have == want if cmp == "==" else
                          have > want if cmp == ">" else have >= want)
                    if not ok:
                        violations.append(
                            f"{label}[{e}]: {tok.name} is {have}ns at start, "
                            f"constraint wants {cmp} {want}ns")
            if plan.is_quantum:
                for q in plan.qubits:
                    if q in busy and s < busy[q]:
                        violations.append(
                            f"{label}[{e}]: qubit q{q} busy until {busy[q]}, "
                            f"op starts at {s}")
                    busy[q] = s + plan.quantum_dur
            toks = []
            if plan.timing is not None:
                toks.extend(r.value for r in plan.timing.resets)
            if plan.resets_instr is not None:
                toks.extend(t.value for t in plan.resets_instr.timers)
            for tok in toks:
                resets[tok] = s
            pos = s + plan.span
    return violations
