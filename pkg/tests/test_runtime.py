import json
import subprocess
import sys
from pathlib import Path

import pytest

from qgrt.errors import NotCompleted, UnknownKernelOp
from qgrt.frontend.types import type_text
from qgrt.runtime import RunHandle, call_kernel, compile_kernel, read_result
from qgrt.wire import decode_value, parse_type_text

from support import CONFIG_PATH, make_rtcfg


def test_call_kernel_sum_random_false(kernels):
    handle = call_kernel(kernels / "kernel.qu", "sum_random", [[2, 6, 8], False],
                         make_rtcfg(seed=11))
    value, desc = read_result(handle)
    assert value == (16, 0)
    assert type_text(desc) == "(int,int)"
    assert handle.result.data == bytes.fromhex("1000000000000000")


def test_phase_ordering(kernels):
    handle = call_kernel(kernels / "kernel.qu", "sum_random", [[2, 6, 8], True],
                         make_rtcfg(seed=1))
    assert handle.phase_log == [3, 4, 5, 6]


def test_unknown_operation(kernels):
    with pytest.raises(UnknownKernelOp):
        call_kernel(kernels / "kernel.qu", "nonsense", [], make_rtcfg())


def test_read_result_before_completion():
    with pytest.raises(NotCompleted):
        read_result(RunHandle())


def test_determinism_across_calls(kernels):
    a = call_kernel(kernels / "kernel.qu", "sum_random", [[2, 6, 8], True],
                    make_rtcfg(seed=33))
    b = call_kernel(kernels / "kernel.qu", "sum_random", [[2, 6, 8], True],
                    make_rtcfg(seed=33))
    assert a.result.data == b.result.data and a.value == b.value


def test_generated_main_transparent(kernels):
    rt = make_rtcfg(seed=2)
    a = compile_kernel(kernels / "kernel.qu", "sum_random", [[2, 6, 8], True], rt)
    b = compile_kernel(kernels / "kernel.qu", "sum_random", [[2, 6, 8], True], rt)
    assert a.main_source == b.main_source
    assert a.asm_text == b.asm_text


def test_unit_returning_kernel_reads_none(kernels):
    handle = call_kernel(kernels / "t2.qu", "t2", [True], make_rtcfg(seed=1))
    value, desc = read_result(handle)
    assert value is None and type_text(desc) == "unit"
    assert handle.result.data == b""


def test_f32_double_mode_round_trips(kernels):
    handle = call_kernel(kernels / "ipe.qu", "ipe", [3],
                         make_rtcfg(seed=3, f32_doubles=True))
    value, _ = read_result(handle)
    assert value == 0.625
    assert len(handle.result.data) == 4


def test_error_carries_phase_tag(kernels):
    rt = make_rtcfg(strict_pulse=True)
    try:
        call_kernel(kernels / "pulsedemo.qu", "pulses", [], rt)
        raise AssertionError("expected a phase-5 failure")
    except Exception as exc:
        assert getattr(exc, "phase", None) == 5


def qgrt_cli(tmp_path, *argv):
    from qgrt.cli import main_qgrt
    import io
    import contextlib
    out = io.StringIO()
    err = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main_qgrt(list(argv))
    return code, out.getvalue(), err.getvalue()


def qvm_cli(*argv):
    from qgrt.cli import main_qvm
    import io
    import contextlib
    out = io.StringIO()
    err = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main_qvm(list(argv))
    return code, out.getvalue(), err.getvalue()


def test_cli_call_success(tmp_path, kernels):
    out_bin = tmp_path / "r.bin"
    out_desc = tmp_path / "r.desc"
    code, out, err = qgrt_cli(
        tmp_path, "call", "--kernel", str(kernels / "kernel.qu"),
        "--op", "sum_random", "--args-json", "[[2,6,8], false]",
        "--config", str(CONFIG_PATH), "--seed", "4",
        "--out", str(out_bin), "--desc", str(out_desc))
    assert code == 0, err
    assert json.loads(out) == [16, 0]
    assert out_bin.read_bytes() == bytes.fromhex("1000000000000000")
    assert out_desc.read_text().strip() == "(int,int)"


def test_cli_decode_round_trip(tmp_path, kernels):
    out_bin = tmp_path / "r.bin"
    out_desc = tmp_path / "r.desc"
    qgrt_cli(tmp_path, "call", "--kernel", str(kernels / "ipe.qu"), "--op", "ipe",
             "--args-json", "[3]", "--config", str(CONFIG_PATH), "--seed", "0",
             "--out", str(out_bin), "--desc", str(out_desc))
    code, out, err = qgrt_cli(tmp_path, "decode", "--in", str(out_bin),
                              "--desc-file", str(out_desc))
    assert code == 0 and json.loads(out) == 0.625


def test_cli_compile_error_exit_2(tmp_path):
    bad = tmp_path / "bad.qu"
    bad.write_text("operation f() {}")
    code, out, err = qgrt_cli(tmp_path, "call", "--kernel", str(bad), "--op", "f",
                              "--config", str(CONFIG_PATH))
    assert code == 2
    assert "error[ParseError]" in err


def test_cli_arg_conversion_error_exit_2(tmp_path, kernels):
    code, out, err = qgrt_cli(
        tmp_path, "call", "--kernel", str(kernels / "kernel.qu"),
        "--op", "sum_random", "--args-json", "[[1, true], false]",
        "--config", str(CONFIG_PATH))
    assert code == 2
    assert "error[ArgTypeError]" in err


def test_cli_runtime_error_exit_3(tmp_path, kernels):
    code, out, err = qgrt_cli(
        tmp_path, "call", "--kernel", str(kernels / "pulsedemo.qu"),
        "--op", "pulses", "--config", str(CONFIG_PATH), "--strict-pulse")
    assert code == 3


def test_cli_dump_ir_and_schedule(tmp_path, kernels):
    code, out, err = qgrt_cli(
        tmp_path, "compile", "--kernel", str(kernels / "t2.qu"), "--op", "t2",
        "--args-json", "[true]", "--config", str(CONFIG_PATH),
        "--dump-ir", "--dump-schedule")
    assert code == 0
    assert "qop X" in out and "block" in out


def test_cli_qvm_run(tmp_path, kernels):
    asm = tmp_path / "prog.eqa"
    code, _, err = qgrt_cli(
        tmp_path, "compile", "--kernel", str(kernels / "kernel.qu"),
        "--op", "sum_random", "--args-json", "[[2,6,8], false]",
        "--config", str(CONFIG_PATH), "-o", str(asm))
    assert code == 0, err
    trace = tmp_path / "t.jsonl"
    code, out, err = qvm_cli("run", str(asm), "--config", str(CONFIG_PATH),
                             "--seed", "7", "--trace", str(trace))
    assert code == 0, err
    summary = json.loads(out)
    assert summary["result"] == [16, 0]
    lines = [json.loads(l) for l in trace.read_text().splitlines()]
    assert lines and all("cycle" in l and "instr" in l for l in lines)


def test_console_scripts_installed():
    result = subprocess.run(["qgrt", "--help"], capture_output=True, text=True)
    assert result.returncode == 0 and "call" in result.stdout
    result = subprocess.run(["qvm", "--help"], capture_output=True, text=True)
    assert result.returncode == 0
