"""Independent reference implementations used only to check the toolchain.

These deliberately avoid the package's own tensor machinery: gates expand to
dense 2^n matrices by index arithmetic, schedules come from exhaustive
lexicographic search, and the phase-estimation reference walks the
sub-circuits with plain matrix products.
"""
from __future__ import annotations

import math

import numpy as np


def expand_gate(u: np.ndarray, qubits: list[int], n: int) -> np.ndarray:
    """Dense 2^n matrix applying u on the listed qubits (qubits[0] is the most
    significant matrix bit); brute-force over basis states."""
    dim = 2 ** n
    k = len(qubits)
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        sub_in = 0
        for j, q in enumerate(qubits):
            bit = (col >> q) & 1
            sub_in |= bit << (k - 1 - j)
        for sub_out in range(2 ** k):
            amp = u[sub_out, sub_in]
            if amp == 0:
                continue
            row = col
            for j, q in enumerate(qubits):
                bit = (sub_out >> (k - 1 - j)) & 1
                row = (row & ~(1 << q)) | (bit << q)
            out[row, col] += amp
    return out


def chain_unitary(gates: list, n: int) -> np.ndarray:
    """Product of expand_gate results, applied left to right."""
    acc = np.eye(2 ** n, dtype=complex)
    for u, qubits in gates:
        acc = expand_gate(u, qubits, n) @ acc
    return acc


def rot(axis: tuple, theta: float) -> np.ndarray:
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    nsig = axis[0] * x + axis[1] * y + axis[2] * z
    return math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * nsig


def ipe_reference_bits(oracle_angle: float, m: int) -> list[int]:
    """Deterministic phase bits from dense simulation of the m sub-circuits.

    Ancilla is qubit 1 (most significant), eigenstate qubit 0, prepared |1>.
    Returns [c_m, ..., c_1] in measurement order.
    """
    h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    rz = rot((0, 0, 1), oracle_angle)
    crz = np.eye(4, dtype=complex)
    crz[2:, 2:] = rz
    bits: list[int] = []
    theta = 0.0
    for k in range(m, 0, -1):
        psi = np.zeros(4, dtype=complex)
        psi[1] = 1.0  # ancilla |0>, eigenstate |1>
        psi = expand_gate(h, [1], 2) @ psi
        psi = expand_gate(rot((0, 0, 1), theta), [1], 2) @ psi
        for _ in range(2 ** (k - 1)):
            psi = crz @ psi
        psi = expand_gate(h, [1], 2) @ psi
        p1 = abs(psi[2]) ** 2 + abs(psi[3]) ** 2
        if p1 > 1 - 1e-9:
            bit = 1
        elif p1 < 1e-9:
            bit = 0
        else:
            raise AssertionError(f"phase is not exactly {m}-bit (P(1)={p1})")
        bits.append(bit)
        theta = (theta - math.pi) / 2 if bit else theta / 2
    return bits


def bits_to_estimate(bits_measured: list[int]) -> float:
    """[c_m..c_1] -> 0.c_1..c_m as a dyadic fraction."""
    est = 0.0
    for bit in bits_measured:
        est = (est + bit) / 2
    return est


# -- exhaustive schedule search -------------------------------------------------

def brute_force_schedule(ops: list, horizon: int):
    """Lexicographically minimal feasible start tuple, or None.

    ops: list of (duration, constraints, resets); constraints are
    (timer, cmp, value) with cmp in {'==', '>', '>='}; timer values count
    from the most recent reset (no implicit reset at entry: include an
    explicit zero-duration reset op if needed). Ops execute serially in
    order. Search is depth-first in ascending start order, so the first
    complete solution found is the lexicographic minimum.
    """
    n = len(ops)
    failed: set = set()

    def rec(i: int, pos: int, resets: tuple, acc: list):
        if i == n:
            return list(acc)
        key = (i, pos, resets)
        if key in failed:
            return None
        dur, cons, rsts = ops[i]
        reset_map = dict(resets)
        pins = []
        lo = pos
        for timer, cmp, value in cons:
            if timer not in reset_map:
                failed.add(key)
                return None
            base = reset_map[timer]
            if cmp == "==":
                pins.append(base + value)
            elif cmp == ">":
                lo = max(lo, base + value + 1)
            else:
                lo = max(lo, base + value)
        if pins:
            s = pins[0]
            candidates = [s] if all(p == s for p in pins) and s >= lo else []
        else:
            candidates = range(lo, horizon + 1)
        for s in candidates:
            if s > horizon:
                break
            r2 = dict(reset_map)
            for t in rsts:
                r2[t] = s
            res = rec(i + 1, s + dur, tuple(sorted(r2.items())), acc + [s])
            if res is not None:
                return res
        failed.add(key)
        return None

    return rec(0, 0, (), [])
