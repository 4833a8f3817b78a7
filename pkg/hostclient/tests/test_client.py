import json
import subprocess
import sys

import pytest

import if_quingo
from if_quingo import ClientError, ClientSession
from if_quingo.decoder import decode, parse_descriptor


def test_call_and_read_sum_random(fresh_session, kernels):
    ok = fresh_session.call_quingo(kernels / "kernel.qu", "sum_random",
                                   [2, 6, 8], False)
    assert ok is True
    assert fresh_session.read_result() == (16, 0)


def test_ipe_returns_exact_estimate(fresh_session, kernels):
    assert fresh_session.call_quingo(kernels / "ipe.qu", "ipe", 3)
    assert fresh_session.read_result() == 0.625


def test_missing_kernel_returns_false(fresh_session):
    assert fresh_session.call_quingo("missing.qu", "f") is False
    assert fresh_session.last_status == 2


def test_heterogeneous_list_rejected_before_runtime(fresh_session, monkeypatch):
    calls = []

    def no_run(*a, **k):
        calls.append(a)
        raise AssertionError("runtime must not be invoked")

    monkeypatch.setattr(subprocess, "run", no_run)
    assert fresh_session.call_quingo("kernel.qu", "sum_random", [1, "x"], False) is False
    assert fresh_session.call_quingo("kernel.qu", "sum_random", [1, True], False) is False
    assert calls == []
    assert fresh_session.last_status is None


def test_oversized_int_rejected_before_runtime(fresh_session, monkeypatch):
    monkeypatch.setattr(subprocess, "run",
                        lambda *a, **k: pytest.fail("runtime must not run"))
    assert fresh_session.call_quingo("ipe.qu", "ipe", 2 ** 31) is False


def test_read_before_any_call_raises(tmp_path):
    session = ClientSession(workdir=tmp_path)
    with pytest.raises(ClientError):
        session.read_result()


def test_read_after_failed_call_raises(fresh_session):
    fresh_session.call_quingo("missing.qu", "f")
    with pytest.raises(ClientError):
        fresh_session.read_result()


def test_unknown_backend_rejected(fresh_session, config_path):
    with pytest.raises(ClientError):
        fresh_session.configure("hw0", config_path, 1)


def test_default_session_uses_qvm():
    assert if_quingo.session().backend == "qvm"


def test_runtime_binary_located_via_env(monkeypatch, tmp_path):
    monkeypatch.setenv("QGRT_BIN", "/opt/tools/qgrt")
    session = ClientSession(workdir=tmp_path)
    assert session.runtime_bin == "/opt/tools/qgrt"


def test_identical_calls_are_deterministic(fresh_session, kernels):
    results = []
    for _ in range(2):
        assert fresh_session.call_quingo(kernels / "kernel.qu", "sum_random",
                                         [2, 6, 8], True)
        results.append((fresh_session.read_result(),
                        fresh_session.last_result_bin.read_bytes()))
    assert results[0] == results[1]
    assert results[0][0][0] == 16 and results[0][0][1] in (2, 6)


def test_value_fidelity_against_runtime_decoder(fresh_session, kernels):
    # the client-side decode must agree with `qgrt decode` on the same block
    assert fresh_session.call_quingo(kernels / "kernel.qu", "sum_random",
                                     [2, 6, 8], True)
    host_value = fresh_session.read_result()
    proc = subprocess.run(
        [fresh_session.runtime_bin, "decode",
         "--in", str(fresh_session.last_result_bin),
         "--desc-file", str(fresh_session.last_result_desc)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    runtime_value = json.loads(proc.stdout)
    assert list(host_value) == runtime_value


def test_decoder_handles_nested_shapes():
    shape = parse_descriptor("(int,int[],(bool,double))")
    from struct import pack
    # fixed part: int(4) offset(4) bool(1) double(8) = 17 bytes; the array
    # field sits at address 4, so its region offset is 17 - 4 = 13
    fixed = pack("<i", 5) + pack("<i", 13) + b"\x01" + pack("<d", 0.5)
    region = pack("<i", 2) + pack("<i", 7) + pack("<i", 8)
    value = decode(fixed + region, shape)
    assert value == (5, [7, 8], (True, 0.5))


def test_rng_host_example_prints_result(examples_dir):
    proc = subprocess.run([sys.executable, str(examples_dir / "rng_host.py")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "(16, 0)" in proc.stdout


def test_ipe_host_example_prints_estimate(examples_dir):
    proc = subprocess.run([sys.executable, str(examples_dir / "ipe_host.py")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.strip() == "0.625"
