"""Runtime system: phase manager, backend driver, converter and decoder.

A kernel call walks the classical-runtime phases in order: (3) the host's
arguments are converted and a zero-parameter main is generated, (4) the
kernel is compiled (semi-statically: the arguments are constants), (5) the
binary runs on the selected backend, (6) the result block is decoded. The
phase log records exactly that sequence.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .codegen import EmissionModel
from .errors import QgrtError, NotCompleted, UnknownKernelOp
from .frontend import ast, parse_source, resolve_imports
from .frontend.typecheck import typecheck
from .frontend.types import QType
from .interp import run_ir
from .ir import IRProgram
from .isa import QProgram, assemble
from .lower import lower
from .maingen import convert_args, generate_main
from .peval import DEFAULT_STEP_BUDGET, partially_execute
from .platform import PlatformConfig, parse_config
from .scheduler import TimedIR, schedule
from . import vm as qvm
from .wire import decode_with_extent


@dataclass
class RuntimeConfig:
    backend: str = "qvm"
    config_path: str | Path = ""
    seed: int = 0
    search_paths: list = field(default_factory=list)
    memory_size: int = qvm.DEFAULT_MEMORY
    strict_pulse: bool = False
    zero_init: bool = False
    classical_ns: int = 1
    step_budget: int = DEFAULT_STEP_BUDGET
    f32_doubles: bool = False


@dataclass
class ResultBlock:
    data: bytes
    descriptor: QType


@dataclass
class CompileResult:
    main_source: str
    descriptor: QType
    unopt_ir: IRProgram
    residual_ir: IRProgram
    timed: TimedIR
    asm_text: str
    qprogram: QProgram
    platform: PlatformConfig


@dataclass
class RunHandle:
    completed: bool = False
    result: ResultBlock | None = None
    value: object = None
    cycles: int = 0
    trace: list = field(default_factory=list)
    meas_trace: list = field(default_factory=list)
    phase_log: list = field(default_factory=list)
    compile_result: CompileResult | None = None


class QvmDriver:
    """Backend driver for the functional VM; the same four entry points a
    hardware driver would implement: upload, start, wait, read."""

    def __init__(self, config: PlatformConfig, rtcfg: RuntimeConfig):
        self.config = config
        self.rtcfg = rtcfg
        self.state = None

    def upload(self, program: QProgram) -> None:
        self.state = qvm.load(
            program, self.config, self.rtcfg.seed,
            memory_size=self.rtcfg.memory_size, zero_init=self.rtcfg.zero_init,
            strict_pulse=self.rtcfg.strict_pulse, classical_ns=self.rtcfg.classical_ns)

    def start(self) -> None:
        qvm.run(self.state)

    def wait(self) -> None:
        pass  # the functional VM runs synchronously in start()

    def read(self, addr: int, length: int) -> bytes:
        return qvm.read_memory(self.state, addr, length)


BACKENDS = {"qvm": QvmDriver}


def load_platform(rtcfg: RuntimeConfig) -> PlatformConfig:
    path = Path(rtcfg.config_path)
    return parse_config(path.read_text(), str(path))


def _tag_phase(exc: QgrtError, phase: int) -> QgrtError:
    exc.phase = phase
    return exc


def compile_kernel(kernel_path: str | Path, op_name: str, args: list,
                   rtcfg: RuntimeConfig,
                   platform: PlatformConfig | None = None) -> CompileResult:
    kernel_path = Path(kernel_path)
    if platform is None:
        platform = load_platform(rtcfg)

    # phase (3): classical pre-execution fixes the kernel interface parameters
    kernel_unit = parse_source(kernel_path.read_text(), str(kernel_path))
    callee = next((d for d in kernel_unit.decls
                   if isinstance(d, ast.OperationDecl) and d.name == op_name), None)
    if callee is None:
        raise UnknownKernelOp(f"kernel file declares no operation {op_name!r}")
    kargs = convert_args(args, [(p.name, p.qtype) for p in callee.params])
    main_source = generate_main(op_name, kargs, callee)
    main_unit = parse_source(main_source, "<generated main>")
    main_unit.package = kernel_unit.package
    main_unit.explicit_package = kernel_unit.explicit_package

    # phase (4): quantum compilation
    search = [kernel_path.parent, Path(rtcfg.config_path)] + list(rtcfg.search_paths)
    linked = resolve_imports([kernel_unit, main_unit], search)
    typed = typecheck(linked, platform)
    typed.entry_package = kernel_unit.package
    typed.entry_name = "main"
    unopt = lower(typed)
    residual = partially_execute(unopt, platform, rtcfg.step_budget)
    timed = schedule(residual, platform, rtcfg.classical_ns, rtcfg.f32_doubles)
    model: EmissionModel = timed.model
    asm_text = model.emit(timed)
    qprogram = assemble(asm_text)
    return CompileResult(main_source, residual.ret_type, unopt, residual, timed,
                         asm_text, qprogram, platform)


def call_kernel(kernel_path: str | Path, op_name: str, args: list,
                rtcfg: RuntimeConfig) -> RunHandle:
    handle = RunHandle()
    if rtcfg.backend not in BACKENDS:
        raise UnknownKernelOp(f"unknown backend {rtcfg.backend!r}")
    platform = load_platform(rtcfg)
    handle.phase_log.append(3)
    try:
        cr = compile_kernel(kernel_path, op_name, args, rtcfg, platform)
    except QgrtError as exc:
        raise _tag_phase(exc, 4)
    handle.compile_result = cr
    handle.phase_log.append(4)

    driver = BACKENDS[rtcfg.backend](platform, rtcfg)
    try:
        driver.upload(cr.qprogram)
        driver.start()
        driver.wait()
        image = driver.read(0, rtcfg.memory_size)
    except QgrtError as exc:
        raise _tag_phase(exc, 5)
    handle.phase_log.append(5)
    handle.cycles = driver.state.cycle
    handle.trace = driver.state.trace
    handle.meas_trace = driver.state.meas_trace

    try:
        value, extent = decode_with_extent(image, cr.descriptor, rtcfg.f32_doubles)
    except QgrtError as exc:
        raise _tag_phase(exc, 6)
    handle.result = ResultBlock(image[:extent], cr.descriptor)
    handle.value = value
    handle.phase_log.append(6)
    handle.completed = True
    return handle


def read_result(handle: RunHandle):
    if not handle.completed:
        raise NotCompleted("the kernel call has not completed successfully")
    return handle.value, handle.result.descriptor


def run_ir_oracle(program: IRProgram, platform: PlatformConfig, seed: int,
                  zero_init: bool = False):
    """Direct IR interpretation (no scheduling/codegen); the equivalence oracle."""
    return run_ir(program, platform, seed, zero_init=zero_init)
