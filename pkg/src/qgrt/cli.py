"""Command-line entry points: `qgrt` (runtime) and `qvm` (simulator).

Exit codes for `qgrt call`: 0 success, 2 compile-time failure, 3 runtime
failure. Diagnostics print as `file:line:col: error[CODE]: message`.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import QgrtError, VmError
from .frontend.types import parse_type_text, type_text
from .ir import ir_text
from .isa import assemble
from .platform import parse_config
from .runtime import RuntimeConfig, call_kernel, compile_kernel, read_result
from . import vm as qvm
from .wire import decode_value


def _jsonable(value):
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, list):
        return [_jsonable(v) for v in value]
    return value


def _add_runtime_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="platform config (.qfg)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--search-path", action="append", default=[],
                   help="extra package search directory (repeatable)")
    p.add_argument("--zero-init", action="store_true",
                   help="start qubits in |0> instead of a seeded random state")
    p.add_argument("--strict-pulse", action="store_true",
                   help="make executing a pulse an error")
    p.add_argument("--classical-cycle-ns", type=int, default=1)
    p.add_argument("--step-budget", type=int, default=10 ** 6)
    p.add_argument("--f32-doubles", action="store_true",
                   help="serialize doubles as 4-byte floats (strict legacy mode)")


def _rtcfg(args) -> RuntimeConfig:
    return RuntimeConfig(
        backend=getattr(args, "backend", "qvm"),
        config_path=args.config,
        seed=args.seed,
        search_paths=[Path(p) for p in args.search_path],
        strict_pulse=args.strict_pulse,
        zero_init=args.zero_init,
        classical_ns=args.classical_cycle_ns,
        step_budget=args.step_budget,
        f32_doubles=args.f32_doubles,
    )


def _dump_schedule(timed) -> str:
    out = []
    for label in timed.order:
        tb = timed.blocks[label]
        out.append(f"block {label}")
        for start, plan in zip(tb.starts, timed.model.plans[label]):
            if plan.is_quantum:
                words = plan.lines[0].split()
                name = words[1] if words[0] == "qop" else words[0]
                qubits = ",".join(f"q{q}" for q in plan.qubits)
                out.append(f"{start} {name} {qubits}")
    return "\n".join(out) + "\n"


def main_qgrt(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qgrt", description="quantum-kernel runtime")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_call = sub.add_parser("call", help="compile, execute, and decode a kernel call")
    p_call.add_argument("--kernel", required=True)
    p_call.add_argument("--op", required=True)
    p_call.add_argument("--args-json", default="[]")
    p_call.add_argument("--backend", default="qvm")
    p_call.add_argument("--out", help="write the result block bytes here")
    p_call.add_argument("--desc", help="write the result type descriptor here")
    p_call.add_argument("--dump-ir", action="store_true")
    p_call.add_argument("--dump-schedule", action="store_true")
    _add_runtime_flags(p_call)

    p_compile = sub.add_parser("compile", help="compile a kernel call to assembly")
    p_compile.add_argument("--kernel", required=True)
    p_compile.add_argument("--op", required=True)
    p_compile.add_argument("--args-json", default="[]")
    p_compile.add_argument("-o", "--output", help="assembly output path (.eqa)")
    p_compile.add_argument("--dump-ir", action="store_true")
    p_compile.add_argument("--dump-schedule", action="store_true")
    _add_runtime_flags(p_compile)

    p_decode = sub.add_parser("decode", help="decode a result block")
    p_decode.add_argument("--in", dest="infile", required=True)
    p_decode.add_argument("--desc", help="type descriptor text, e.g. '(int,int)'")
    p_decode.add_argument("--desc-file", help="file holding the descriptor text")
    p_decode.add_argument("--f32-doubles", action="store_true")

    args = parser.parse_args(argv)
    try:
        if args.cmd == "decode":
            data = Path(args.infile).read_bytes()
            desc_text = args.desc or Path(args.desc_file).read_text().strip()
            value = decode_value(data, parse_type_text(desc_text), args.f32_doubles)
            print(json.dumps(_jsonable(value)))
            return 0
        try:
            raw_args = json.loads(args.args_json)
        except json.JSONDecodeError as exc:
            print(f"error[ArgTypeError]: bad --args-json: {exc}", file=sys.stderr)
            return 2
        rtcfg = _rtcfg(args)
        if args.cmd == "compile":
            cr = compile_kernel(args.kernel, args.op, raw_args, rtcfg)
            if args.dump_ir:
                print(ir_text(cr.residual_ir), end="")
            if args.dump_schedule:
                print(_dump_schedule(cr.timed), end="")
            if args.output:
                Path(args.output).write_text(cr.asm_text)
            elif not (args.dump_ir or args.dump_schedule):
                print(cr.asm_text, end="")
            return 0
        # call
        handle = call_kernel(args.kernel, args.op, raw_args, rtcfg)
        cr = handle.compile_result
        if args.dump_ir:
            print(ir_text(cr.residual_ir), end="")
        if args.dump_schedule:
            print(_dump_schedule(cr.timed), end="")
        if args.out:
            Path(args.out).write_bytes(handle.result.data)
        if args.desc:
            Path(args.desc).write_text(type_text(handle.result.descriptor) + "\n")
        value, _ = read_result(handle)
        print(json.dumps(_jsonable(value)))
        return 0
    except VmError as exc:
        print(exc.render(), file=sys.stderr)
        return 3
    except QgrtError as exc:
        phase = getattr(exc, "phase", None)
        print(exc.render(), file=sys.stderr)
        return 3 if phase == 5 else 2
    except FileNotFoundError as exc:
        print(f"error[IO]: {exc}", file=sys.stderr)
        return 2


def main_qvm(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qvm", description="control-processor VM")
    sub = parser.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="execute an assembly program")
    p_run.add_argument("program", help="assembly file (.eqa)")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--trace", help="write a JSONL execution trace here")
    p_run.add_argument("--zero-init", action="store_true")
    p_run.add_argument("--strict-pulse", action="store_true")
    p_run.add_argument("--classical-cycle-ns", type=int, default=1)
    p_run.add_argument("--max-cycles", type=int)
    args = parser.parse_args(argv)
    try:
        prog = assemble(Path(args.program).read_text())
        config = parse_config(Path(args.config).read_text(), args.config)
        state = qvm.load(prog, config, args.seed, zero_init=args.zero_init,
                         strict_pulse=args.strict_pulse,
                         classical_ns=args.classical_cycle_ns)
        qvm.run(state, max_cycles=args.max_cycles)
        if args.trace:
            with open(args.trace, "w") as fh:
                for entry in state.trace:
                    fh.write(json.dumps(entry) + "\n")
        summary = {"cycles": state.cycle, "qubits": prog.qubit_count}
        if prog.rettype_text != "unit":
            value = decode_value(bytes(state.mem), parse_type_text(prog.rettype_text))
            summary["result"] = _jsonable(value)
        print(json.dumps(summary))
        return 0
    except QgrtError as exc:
        print(exc.render(), file=sys.stderr)
        return 3 if isinstance(exc, VmError) else 2
    except FileNotFoundError as exc:
        print(f"error[IO]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main_qgrt())
