"""State-vector backend with seeded measurement.

Qubit i is bit i of the amplitude index. Fresh qubits join in a
seed-and-index-determined random pure state (not |0>), so kernels that skip
explicit initialization are caught; a zero_init flag restores |0> for
cross-checks. Reset is measure-then-flip, which stays correct for entangled
qubits and keeps runs reproducible through the single measurement stream.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import TooManyQubits
from .platform import OpDef, PlatformConfig, semantics_unitary

MAX_QUBITS = 12

_X = np.array([[0, 1], [1, 0]], dtype=complex)


def qubit_init_state(seed: int, index: int, zero_init: bool) -> np.ndarray:
    if zero_init:
        return np.array([1.0, 0.0], dtype=complex)
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x51C0DE, index])
    theta = math.acos(1 - 2 * rng.random())
    phi = 2 * math.pi * rng.random()
    return np.array([math.cos(theta / 2),
                     np.exp(1j * phi) * math.sin(theta / 2)], dtype=complex)


class QuantumState:
    def __init__(self, seed: int, zero_init: bool = False, max_qubits: int = MAX_QUBITS):
        self.seed = seed
        self.zero_init = zero_init
        self.max_qubits = max_qubits
        self.n = 0
        self.amps = np.array([1.0], dtype=complex)
        self.rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x4D5A5D])

    def ensure(self, index: int) -> None:
        if index >= self.max_qubits:
            raise TooManyQubits(
                f"qubit index {index} exceeds the {self.max_qubits}-qubit state-vector cap")
        while self.n <= index:
            init = qubit_init_state(self.seed, self.n, self.zero_init)
            self.amps = np.kron(init, self.amps)
            self.n += 1

    def apply(self, unitary: np.ndarray, qubits: list[int]) -> None:
        """Apply a 2^k unitary; qubits[0] is the most significant matrix bit."""
        for q in qubits:
            self.ensure(q)
        k = len(qubits)
        axes = [self.n - 1 - q for q in qubits]
        psi = self.amps.reshape([2] * self.n)
        u = np.asarray(unitary, dtype=complex).reshape([2] * (2 * k))
        psi = np.tensordot(u, psi, axes=(list(range(k, 2 * k)), axes))
        psi = np.moveaxis(psi, range(k), axes)
        self.amps = np.ascontiguousarray(psi).reshape(-1)

    def prob_one(self, qubit: int) -> float:
        self.ensure(qubit)
        psi = self.amps.reshape([2] * self.n)
        axis = self.n - 1 - qubit
        marg = np.sum(np.abs(psi) ** 2, axis=tuple(a for a in range(self.n) if a != axis))
        return float(marg[1])

    def _collapse(self, qubit: int, outcome: int) -> None:
        psi = self.amps.reshape([2] * self.n)
        axis = self.n - 1 - qubit
        idx = [slice(None)] * self.n
        idx[axis] = 1 - outcome
        psi[tuple(idx)] = 0.0
        flat = psi.reshape(-1)
        norm = np.linalg.norm(flat)
        self.amps = flat / norm

    def measure(self, qubit: int) -> int:
        p1 = self.prob_one(qubit)
        outcome = 1 if self.rng.random() < p1 else 0
        self._collapse(qubit, outcome)
        return outcome

    def reset(self, qubit: int) -> None:
        if self.measure(qubit) == 1:
            self.apply(_X, [qubit])

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


def build_unitary(config: PlatformConfig, name: str, mods: tuple,
                  params: list) -> np.ndarray:
    """Unitary of a (possibly control-/invert-modified) operation."""
    opdef = config.operations[name]
    u = semantics_unitary(opdef, params)
    for m in reversed(mods):
        if m[0] == "inv":
            u = u.conj().T
        else:
            for _ in range(m[1]):
                dim = u.shape[0]
                ext = np.eye(2 * dim, dtype=complex)
                ext[dim:, dim:] = u
                u = ext
    return u


def opdef_for(config: PlatformConfig, name: str) -> OpDef:
    return config.operations[name]
