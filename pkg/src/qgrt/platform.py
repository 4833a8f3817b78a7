"""Platform-dependent configuration: primitive operation semantics and timing.

A config file is a ``package <name>;`` header followed by a JSON object with
``platform`` and ``operations`` sections (extension ``.qfg``). Durations are
integer nanoseconds, or time-literal strings such as ``"0.02us"`` that
canonicalize to whole nanoseconds.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigSemantic, ConfigSyntax, NoUnitary
from .frontend.types import PRIMS, QType, TIME_UNITS

_AXIS_TOL = 1e-9
_UNITARY_TOL = 1e-9

PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class Rotation:
    axis: tuple[float, float, float]
    angle: float | str  # radians, or the name of a declared parameter

    variant = "rotation"


@dataclass(frozen=True)
class Matrix:
    entries: tuple  # row-major tuple of tuples of complex

    variant = "matrix"


@dataclass(frozen=True)
class MeasureSem:
    variant = "measure"


@dataclass(frozen=True)
class Pulse:
    assembly: str

    variant = "pulse"


@dataclass(frozen=True)
class Reset:
    variant = "reset"


Semantics = Rotation | Matrix | MeasureSem | Pulse | Reset


@dataclass(frozen=True)
class OpDef:
    name: str
    duration_ns: int
    num_qubits: int
    params: tuple[tuple[str, QType], ...]
    semantics: Semantics


@dataclass(frozen=True)
class PlatformConfig:
    package_name: str
    qubit_count: int
    cycle_time_ns: int
    operations: dict[str, OpDef] = field(default_factory=dict)


def canonical_ns(value, what: str) -> int:
    """Convert a duration (number of ns, or '<num><unit>' string) to whole ns."""
    if isinstance(value, str):
        unit = None
        for u in sorted(TIME_UNITS, key=len, reverse=True):
            if value.endswith(u):
                unit = u
                break
        if unit is None:
            raise ConfigSemantic(f"{what}: no time unit in {value!r}")
        try:
            magnitude = float(value[: -len(unit)])
        except ValueError:
            raise ConfigSemantic(f"{what}: bad time literal {value!r}") from None
        ns = magnitude * TIME_UNITS[unit]
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        ns = float(value)
    else:
        raise ConfigSemantic(f"{what}: expected a duration, got {value!r}")
    rounded = round(ns)
    if not math.isfinite(ns) or abs(ns - rounded) > 1e-6:
        raise ConfigSemantic(f"{what}: {value!r} is not a whole number of ns")
    return int(rounded)


def _check_keys(obj: dict, allowed: set[str], required: set[str], what: str,
                ignore_extra: bool = False) -> None:
    if not isinstance(obj, dict):
        raise ConfigSyntax(f"{what} must be an object")
    missing = required - obj.keys()
    if missing:
        raise ConfigSyntax(f"{what}: missing key(s) {sorted(missing)}")
    if not ignore_extra:
        extra = obj.keys() - allowed
        if extra:
            raise ConfigSyntax(f"{what}: unknown key(s) {sorted(extra)}")


def _parse_semantics(obj, name: str, num_qubits: int, param_names: set[str]) -> Semantics:
    what = f"operations.{name}.semantics"
    _check_keys(obj, {"variant", "axis", "angle", "entries", "assembly"}, {"variant"}, what)
    variant = obj["variant"]
    if variant == "rotation":
        _check_keys(obj, {"variant", "axis", "angle"}, {"variant", "axis", "angle"}, what)
        axis = obj["axis"]
        if (not isinstance(axis, list) or len(axis) != 3
                or not all(isinstance(c, (int, float)) for c in axis)):
            raise ConfigSemantic(f"{what}: axis must be a 3-vector")
        norm = math.sqrt(sum(c * c for c in axis))
        if abs(norm - 1.0) > _AXIS_TOL:
            raise ConfigSemantic(f"{what}: axis norm {norm} is not 1")
        angle = obj["angle"]
        if isinstance(angle, str):
            if angle not in param_names:
                raise ConfigSemantic(f"{what}: angle parameter {angle!r} not declared")
        elif not isinstance(angle, (int, float)):
            raise ConfigSemantic(f"{what}: angle must be a number or parameter name")
        if num_qubits != 1:
            raise ConfigSemantic(f"{what}: rotation semantics is single-qubit")
        return Rotation(tuple(float(c) for c in axis), angle if isinstance(angle, str) else float(angle))
    if variant == "matrix":
        _check_keys(obj, {"variant", "entries"}, {"variant", "entries"}, what)
        dim = 2 ** num_qubits
        rows = obj["entries"]
        if not isinstance(rows, list) or len(rows) != dim:
            raise ConfigSemantic(f"{what}: expected {dim}x{dim} matrix")
        entries = []
        for row in rows:
            if not isinstance(row, list) or len(row) != dim:
                raise ConfigSemantic(f"{what}: expected {dim}x{dim} matrix")
            out_row = []
            for cell in row:
                if isinstance(cell, (int, float)):
                    out_row.append(complex(cell))
                elif (isinstance(cell, list) and len(cell) == 2
                      and all(isinstance(c, (int, float)) for c in cell)):
                    out_row.append(complex(cell[0], cell[1]))
                else:
                    raise ConfigSemantic(f"{what}: entries are numbers or [re, im] pairs")
            entries.append(tuple(out_row))
        u = np.array(entries, dtype=complex)
        dev = np.max(np.abs(u.conj().T @ u - np.eye(dim)))
        if dev > _UNITARY_TOL:
            raise ConfigSemantic(f"{what}: matrix is not unitary (deviation {dev:.3g})")
        return Matrix(tuple(entries))
    if variant == "measure":
        _check_keys(obj, {"variant"}, {"variant"}, what)
        return MeasureSem()
    if variant == "pulse":
        _check_keys(obj, {"variant", "assembly"}, {"variant", "assembly"}, what)
        if not isinstance(obj["assembly"], str):
            raise ConfigSemantic(f"{what}: assembly must be a string")
        if '"' in obj["assembly"] or "\n" in obj["assembly"]:
            raise ConfigSemantic(
                f"{what}: assembly text may not contain quotes or newlines "
                "(it is forwarded on a single assembly line)")
        return Pulse(obj["assembly"])
    if variant == "reset":
        _check_keys(obj, {"variant"}, {"variant"}, what)
        return Reset()
    raise ConfigSemantic(f"{what}: unknown variant {variant!r}")


def parse_config(text: str, filename: str = "<config>") -> PlatformConfig:
    stripped = text.lstrip()
    if not stripped.startswith("package"):
        raise ConfigSyntax(f"{filename}: config must start with a package statement")
    header, sep, body = stripped.partition(";")
    if not sep:
        raise ConfigSyntax(f"{filename}: missing ';' after package statement")
    package_name = header[len("package"):].strip()
    if not package_name or not all(p.isidentifier() for p in package_name.split(".")):
        raise ConfigSyntax(f"{filename}: bad package name {package_name!r}")
    def no_dup_pairs(pairs):
        out = {}
        for k, v in pairs:
            if k in out:
                raise ConfigSyntax(f"{filename}: duplicate key {k!r}")
            out[k] = v
        return out

    try:
        doc = json.loads(body, object_pairs_hook=no_dup_pairs)
    except json.JSONDecodeError as exc:
        raise ConfigSyntax(f"{filename}: {exc}") from None
    _check_keys(doc, {"platform", "operations"}, {"platform", "operations"}, "config")
    # extra platform fields are tolerated as backend extensions
    _check_keys(doc["platform"], {"qubit_count", "cycle_time_ns"}, {"qubit_count", "cycle_time_ns"},
                "platform", ignore_extra=True)
    qubit_count = doc["platform"]["qubit_count"]
    if not isinstance(qubit_count, int) or isinstance(qubit_count, bool) or qubit_count < 1:
        raise ConfigSemantic("platform.qubit_count must be a positive integer")
    cycle = canonical_ns(doc["platform"]["cycle_time_ns"], "platform.cycle_time_ns")
    if cycle < 1:
        raise ConfigSemantic("platform.cycle_time_ns must be at least 1")
    if not isinstance(doc["operations"], dict):
        raise ConfigSyntax("operations must be an object")
    operations: dict[str, OpDef] = {}
    for name, body_op in doc["operations"].items():
        what = f"operations.{name}"
        _check_keys(body_op, {"duration_ns", "num_qubits", "params", "semantics"},
                    {"duration_ns", "num_qubits", "params", "semantics"}, what)
        duration = canonical_ns(body_op["duration_ns"], f"{what}.duration_ns")
        if duration < 1:
            raise ConfigSemantic(f"{what}: duration must be positive")
        nq = body_op["num_qubits"]
        if not isinstance(nq, int) or isinstance(nq, bool) or nq < 1:
            raise ConfigSemantic(f"{what}: num_qubits must be a positive integer")
        params: list[tuple[str, QType]] = []
        if not isinstance(body_op["params"], list):
            raise ConfigSyntax(f"{what}.params must be a list of [name, type] pairs")
        for p in body_op["params"]:
            if (not isinstance(p, list) or len(p) != 2
                    or not isinstance(p[0], str) or p[1] not in ("int", "double", "bool")):
                raise ConfigSyntax(f"{what}.params entries are [name, 'int'|'double'|'bool'] pairs")
            params.append((p[0], PRIMS[p[1]]))
        sem = _parse_semantics(body_op["semantics"], name, nq, {p[0] for p in params})
        if name in operations:
            raise ConfigSemantic(f"duplicate operation {name!r}")
        operations[name] = OpDef(name, duration, nq, tuple(params), sem)
    # the ISA has single measure/init mnemonics, so these bindings must be unique
    for variant, cls in (("measure", MeasureSem), ("reset", Reset)):
        found = [n for n, op in operations.items() if isinstance(op.semantics, cls)]
        if len(found) > 1:
            raise ConfigSemantic(
                f"at most one operation may have {variant} semantics, got {found}")
    return PlatformConfig(package_name, qubit_count, cycle, operations)


def find_semantics(cfg: PlatformConfig, cls) -> OpDef | None:
    for op in cfg.operations.values():
        if isinstance(op.semantics, cls):
            return op
    return None


def print_config(cfg: PlatformConfig) -> str:
    """Canonical text form; parse_config(print_config(c)) == c."""
    def sem_obj(sem: Semantics):
        if isinstance(sem, Rotation):
            return {"variant": "rotation", "axis": list(sem.axis), "angle": sem.angle}
        if isinstance(sem, Matrix):
            return {"variant": "matrix",
                    "entries": [[[c.real, c.imag] for c in row] for row in sem.entries]}
        if isinstance(sem, Pulse):
            return {"variant": "pulse", "assembly": sem.assembly}
        return {"variant": sem.variant}

    doc = {
        "platform": {"qubit_count": cfg.qubit_count, "cycle_time_ns": cfg.cycle_time_ns},
        "operations": {
            op.name: {
                "duration_ns": op.duration_ns,
                "num_qubits": op.num_qubits,
                "params": [[n, t.kind] for n, t in op.params],
                "semantics": sem_obj(op.semantics),
            }
            for op in cfg.operations.values()
        },
    }
    return f"package {cfg.package_name};\n" + json.dumps(doc, indent=2) + "\n"


def rotation_unitary(axis: tuple[float, float, float], angle: float) -> np.ndarray:
    nx, ny, nz = axis
    n_sigma = nx * PAULI["X"] + ny * PAULI["Y"] + nz * PAULI["Z"]
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * n_sigma


def semantics_unitary(opdef: OpDef, actual_params: list | tuple = ()) -> np.ndarray:
    """Unitary of a rotation/matrix operation with parameters bound.

    First listed qubit of the operation maps to the most significant bit of
    the matrix index.
    """
    sem = opdef.semantics
    if isinstance(sem, Matrix):
        return np.array(sem.entries, dtype=complex)
    if isinstance(sem, Rotation):
        if isinstance(sem.angle, str):
            names = [n for n, _ in opdef.params]
            try:
                angle = float(actual_params[names.index(sem.angle)])
            except (ValueError, IndexError):
                raise NoUnitary(
                    f"{opdef.name}: angle parameter {sem.angle!r} not bound") from None
        else:
            angle = sem.angle
        return rotation_unitary(sem.axis, angle)
    raise NoUnitary(f"{opdef.name}: {sem.variant} semantics has no unitary")


def duration_ns(opdef: OpDef) -> int:
    return opdef.duration_ns
