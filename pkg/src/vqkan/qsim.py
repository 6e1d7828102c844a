"""Dense statevector simulator.

Amplitudes are little-endian: bit ``j`` of a basis index is the state of
qubit ``j``. Rotations follow ``R_a(t) = exp(-i t A / 2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 8

SQRT_ACOS = "sqrt_acos"
ACOS = "acos"
ENCODINGS = (SQRT_ACOS, ACOS)


class StateVector:
    """A register of ``num_qubits`` qubits held as ``2**num_qubits`` amplitudes."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, num_qubits: int, amplitudes: np.ndarray):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << num_qubits,):
            raise ValueError(
                f"expected {1 << num_qubits} amplitudes for {num_qubits} qubits, "
                f"got shape {amplitudes.shape}"
            )
        self.num_qubits = num_qubits
        self.amplitudes = amplitudes

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __len__(self) -> int:
        return self.amplitudes.shape[0]

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"


GATE_KINDS = ("rx", "ry", "rz", "h", "i", "cx", "cz")
_ROTATIONS = ("rx", "ry", "rz")


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity = 2 if self.kind in ("cx", "cz") else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} acts on {arity} qubit(s), got {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError("control and target must differ")

    def inverse(self) -> "Gate":
        if self.kind in _ROTATIONS:
            return Gate(self.kind, self.qubits, -self.angle)
        return self


def rx(q: int, angle: float) -> Gate:
    return Gate("rx", (q,), angle)


def ry(q: int, angle: float) -> Gate:
    return Gate("ry", (q,), angle)


def rz(q: int, angle: float) -> Gate:
    return Gate("rz", (q,), angle)


def hadamard(q: int) -> Gate:
    return Gate("h", (q,))


def cnot(control: int, target: int) -> Gate:
    return Gate("cx", (control, target))


def cz(a: int, b: int) -> Gate:
    return Gate("cz", (a, b))


def single_qubit_matrix(kind: str, angle: float = 0.0) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    if kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind == "ry":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind == "rz":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]], dtype=np.complex128)
    if kind == "h":
        return np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
    if kind == "i":
        return np.eye(2, dtype=np.complex128)
    raise ValueError(f"{kind!r} is not a single-qubit gate")


def zero_state(num_qubits: int) -> StateVector:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in 1..{MAX_QUBITS}, got {num_qubits}")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def _check_qubits(state: StateVector, qubits: Iterable[int]) -> None:
    for q in qubits:
        if not 0 <= q < state.num_qubits:
            raise IndexError(f"qubit {q} out of range for {state.num_qubits}-qubit state")


def _qubit_view(amps: np.ndarray, n: int) -> np.ndarray:
    # axis k of the reshaped tensor is qubit n-1-k
    return amps.reshape((2,) * n)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply ``gate`` in place and return the state."""
    _check_qubits(state, gate.qubits)
    n = state.num_qubits
    psi = _qubit_view(state.amplitudes, n)
    if gate.kind in ("cx", "cz"):
        c, t = gate.qubits
        idx = [slice(None)] * n
        idx[n - 1 - c] = 1
        if gate.kind == "cz":
            idx[n - 1 - t] = 1
            psi[tuple(idx)] *= -1
        else:
            i0, i1 = list(idx), list(idx)
            i0[n - 1 - t], i1[n - 1 - t] = 0, 1
            i0, i1 = tuple(i0), tuple(i1)
            tmp = psi[i0].copy()
            psi[i0] = psi[i1]
            psi[i1] = tmp
        return state
    if gate.kind == "i":
        return state
    m = single_qubit_matrix(gate.kind, gate.angle)
    axis = n - 1 - gate.qubits[0]
    moved = np.moveaxis(psi, axis, 0)
    a0, a1 = moved[0].copy(), moved[1].copy()
    moved[0] = m[0, 0] * a0 + m[0, 1] * a1
    moved[1] = m[1, 0] * a0 + m[1, 1] * a1
    return state


def apply_circuit(state: StateVector, gates: Iterable[Gate]) -> StateVector:
    for g in gates:
        apply_gate(state, g)
    return state


def _encoding_angle(value: float, encoding: str) -> float:
    if encoding == SQRT_ACOS:
        return 2.0 * math.acos(math.sqrt(value))
    if encoding == ACOS:
        return 2.0 * math.acos(value)
    raise ValueError(f"unknown encoding {encoding!r}")


def input_angles(x: Sequence[float], num_qubits: int, encoding: str = SQRT_ACOS) -> list[float]:
    """Ry angle per qubit; qubit ``j`` reads component ``j mod len(x)``."""
    x = [float(v) for v in x]
    if not x:
        raise ValueError("input vector must be non-empty")
    for v in x:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"input component {v} outside [0, 1]")
    return [_encoding_angle(x[j % len(x)], encoding) for j in range(num_qubits)]


def prepare_input_state(
    x: Sequence[float], num_qubits: int, encoding: str = SQRT_ACOS
) -> StateVector:
    state = zero_state(num_qubits)
    for j, angle in enumerate(input_angles(x, num_qubits, encoding)):
        apply_gate(state, ry(j, angle))
    return state


def z_expectations(state: StateVector) -> np.ndarray:
    """<Z_j> for every qubit j."""
    probs = np.abs(state.amplitudes) ** 2
    idx = np.arange(len(probs))
    out = np.empty(state.num_qubits)
    for j in range(state.num_qubits):
        sign = 1 - 2 * ((idx >> j) & 1)
        out[j] = float(np.dot(sign, probs))
    return out


def expectation_pauli(state: StateVector, p) -> float:
    """<psi|P|psi> for a Pauli string ``p``."""
    from .pauli import pauli_action

    _check_qubits(state, p.qubits)
    flip, phase = pauli_action(p, state.num_qubits)
    psi = state.amplitudes
    idx = np.arange(len(psi))
    # P|k> = phase[k] |k ^ flip>
    val = np.vdot(psi[idx ^ flip], phase * psi)
    if abs(val.imag) > 1e-10:
        raise ArithmeticError(f"non-real Pauli expectation {val}")
    return float(val.real)


def expectation_hamiltonian(state: StateVector, hamiltonian) -> float:
    """sum_j theta_j <P_j> over ``(coefficient, PauliString)`` pairs."""
    terms = list(hamiltonian)
    if not terms:
        raise ValueError("empty Hamiltonian")
    return float(sum(coef * expectation_pauli(state, p) for coef, p in terms))
