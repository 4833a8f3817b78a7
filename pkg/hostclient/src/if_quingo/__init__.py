"""Host-language interface to the quantum-kernel runtime.

Mirrors the three-call protocol a host program needs: configure the execution
environment, call a kernel with host-native arguments, read back the decoded
result. Transport is the runtime CLI plus a pair of files (result block and
type descriptor), so any host language able to spawn a process can implement
this interface. The runtime binary is located through $QGRT_BIN (default:
``qgrt`` on PATH).
"""
from __future__ import annotations

import json
import os
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .decoder import decode, parse_descriptor

KNOWN_BACKENDS = ("qvm",)
INT32_MIN = -(2 ** 31)
INT32_MAX = 2 ** 31 - 1


class ClientError(Exception):
    pass


def _convert_arg(value, where: str):
    """Host value -> JSON-shaped manifest value; raises on values that cannot
    map to kernel types (the runtime is never invoked for these)."""
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        if not INT32_MIN <= value <= INT32_MAX:
            raise ClientError(f"{where}: {value} does not fit in a 32-bit int")
        return value
    if isinstance(value, float):
        return value
    if isinstance(value, tuple):
        return [_convert_arg(v, where) for v in value]
    if isinstance(value, list):
        shapes = {_shape(v) for v in value}
        if not (shapes <= {"bool"} or shapes <= {"num"} or shapes <= {"list"}):
            raise ClientError(f"{where}: heterogeneous list {value!r} "
                              "(kernel arrays are homogeneous)")
        return [_convert_arg(v, where) for v in value]
    raise ClientError(f"{where}: {type(value).__name__} values do not cross "
                      "the kernel boundary")


def _shape(v) -> str:
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, float)):
        return "num"
    if isinstance(v, (list, tuple)):
        return "list"
    return type(v).__name__


@dataclass
class ClientSession:
    runtime_bin: str = ""
    backend: str = "qvm"
    config_path: str = ""
    seed: int = 0
    last_result_bin: Path | None = None
    last_result_desc: Path | None = None
    last_status: int | None = None
    last_stderr: str = ""
    workdir: Path = field(default_factory=lambda: Path(tempfile.mkdtemp(prefix="ifq_")))

    def __post_init__(self):
        if not self.runtime_bin:
            self.runtime_bin = os.environ.get("QGRT_BIN", "qgrt")

    def configure(self, backend: str, config_path, seed: int) -> None:
        if backend not in KNOWN_BACKENDS:
            raise ClientError(f"unknown backend {backend!r}")
        self.backend = backend
        self.config_path = str(config_path)
        self.seed = int(seed)

    def call_quingo(self, kernel_file, op_name: str, *args) -> bool:
        self.last_result_bin = None
        self.last_result_desc = None
        try:
            manifest = json.dumps([_convert_arg(a, f"argument {i}")
                                   for i, a in enumerate(args)])
        except ClientError:
            self.last_status = None  # rejected before the runtime ran
            return False
        out_bin = self.workdir / "result.bin"
        out_desc = self.workdir / "result.desc"
        cmd = [self.runtime_bin, "call",
               "--kernel", str(kernel_file),
               "--op", op_name,
               "--args-json", manifest,
               "--backend", self.backend,
               "--config", self.config_path,
               "--seed", str(self.seed),
               "--out", str(out_bin),
               "--desc", str(out_desc)]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True)
        except FileNotFoundError as exc:
            raise ClientError(f"runtime binary not found: {exc}") from None
        self.last_status = proc.returncode
        self.last_stderr = proc.stderr
        if proc.returncode != 0:
            return False
        self.last_result_bin = out_bin
        self.last_result_desc = out_desc
        return True

    def read_result(self):
        if self.last_result_bin is None or self.last_result_desc is None:
            raise ClientError("no completed kernel call to read a result from")
        shape = parse_descriptor(self.last_result_desc.read_text().strip())
        return decode(self.last_result_bin.read_bytes(), shape)


_session = ClientSession()


def configure(backend: str, config_path, seed: int) -> None:
    _session.configure(backend, config_path, seed)


def call_quingo(kernel_file, op_name: str, *args) -> bool:
    return _session.call_quingo(kernel_file, op_name, *args)


def read_result():
    return _session.read_result()


def session() -> ClientSession:
    return _session
