"""Pauli strings, operator pools and Pauli-string exponentials."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .qsim import Gate, StateVector, _check_qubits, cnot, hadamard, rx, rz

AXES = ("X", "Y", "Z")

RESTRICTED = "restricted"
EXTENDED = "extended"
POOL_FLAVORS = (RESTRICTED, EXTENDED)

# two-body axis labels of the restricted pool, applied as (first on j, second on k)
RESTRICTED_PAIRS = ("XX", "XY", "XZ", "YY", "YZ", "ZZ")
EXTENDED_PAIRS = tuple(a + b for a in AXES for b in AXES)

_FACTOR_RE = re.compile(r"^([XYZ])(\d+)$")


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-qubit Paulis, stored as sorted ``(qubit, axis)`` pairs."""

    factors: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("a Pauli string needs at least one factor")
        facs = tuple(sorted((int(q), str(a).upper()) for q, a in self.factors))
        qubits = [q for q, _ in facs]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"qubit repeated in Pauli string {facs}")
        for q, a in facs:
            if a not in AXES:
                raise ValueError(f"unknown Pauli axis {a!r}")
            if q < 0:
                raise ValueError(f"negative qubit index {q}")
        object.__setattr__(self, "factors", facs)

    @classmethod
    def from_dict(cls, mapping: dict[int, str]) -> "PauliString":
        return cls(tuple(mapping.items()))

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        """Parse the canonical text form, e.g. ``"X0*Y3*Z4"``."""
        parts = [t for t in re.split(r"[*\s]+", text.strip()) if t]
        factors = []
        for part in parts:
            m = _FACTOR_RE.match(part.upper())
            if m is None:
                raise ValueError(f"cannot parse Pauli factor {part!r} in {text!r}")
            factors.append((int(m.group(2)), m.group(1)))
        return cls(tuple(factors))

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.factors)

    @property
    def weight(self) -> int:
        return len(self.factors)

    def axis(self, qubit: int) -> str | None:
        for q, a in self.factors:
            if q == qubit:
                return a
        return None

    def __str__(self) -> str:
        return "*".join(f"{a}{q}" for q, a in self.factors)


def as_pauli(p: "PauliString | str") -> PauliString:
    return p if isinstance(p, PauliString) else PauliString.parse(p)


@dataclass(frozen=True)
class OperatorPool:
    members: tuple[PauliString, ...]
    flavor: str

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]


def generate_pool(num_qubits: int, flavor: str = RESTRICTED) -> OperatorPool:
    """One-body strings by qubit then axis, then two-body strings by pair (j<k) then label."""
    if num_qubits < 2:
        raise ValueError("an operator pool needs at least 2 qubits")
    if flavor not in POOL_FLAVORS:
        raise ValueError(f"unknown pool flavor {flavor!r}")
    labels = RESTRICTED_PAIRS if flavor == RESTRICTED else EXTENDED_PAIRS
    members = [PauliString(((q, a),)) for q in range(num_qubits) for a in AXES]
    for j, k in itertools.combinations(range(num_qubits), 2):
        members.extend(PauliString(((j, lab[0]), (k, lab[1]))) for lab in labels)
    return OperatorPool(tuple(members), flavor)


@lru_cache(maxsize=4096)
def pauli_action(p: PauliString, num_qubits: int) -> tuple[int, np.ndarray]:
    """Return ``(flip, phase)`` with ``P|k> = phase[k] |k ^ flip>``."""
    if max(p.qubits) >= num_qubits:
        raise IndexError(f"{p} does not fit on {num_qubits} qubits")
    dim = 1 << num_qubits
    idx = np.arange(dim)
    flip = 0
    phase = np.ones(dim, dtype=np.complex128)
    for q, a in p.factors:
        bit = (idx >> q) & 1
        if a in ("X", "Y"):
            flip |= 1 << q
        if a == "Y":
            # Y|0> = i|1>, Y|1> = -i|0>
            phase *= np.where(bit == 0, 1j, -1j)
        elif a == "Z":
            phase *= np.where(bit == 0, 1.0, -1.0)
    phase.setflags(write=False)
    return flip, phase


def pauli_matrix(p: PauliString, num_qubits: int) -> np.ndarray:
    flip, phase = pauli_action(p, num_qubits)
    dim = 1 << num_qubits
    m = np.zeros((dim, dim), dtype=np.complex128)
    idx = np.arange(dim)
    m[idx ^ flip, idx] = phase
    return m


def apply_pauli(state: StateVector, p: PauliString) -> StateVector:
    """Return a new state ``P|psi>``."""
    _check_qubits(state, p.qubits)
    flip, phase = pauli_action(p, state.num_qubits)
    idx = np.arange(len(state))
    out = np.empty_like(state.amplitudes)
    out[idx ^ flip] = phase * state.amplitudes
    return StateVector(state.num_qubits, out)


def apply_pauli_exponential(state: StateVector, p: PauliString, theta: float) -> StateVector:
    """In place: ``|psi> <- exp(-i theta P)|psi> = cos(theta)|psi> - i sin(theta) P|psi>``."""
    p_psi = apply_pauli(state, p).amplitudes
    state.amplitudes *= np.cos(theta)
    state.amplitudes += (-1j * np.sin(theta)) * p_psi
    return state


def pauli_exponential_circuit(p: PauliString, theta: float) -> list[Gate]:
    """Gate list realising ``exp(-i theta P)``.

    X factors are rotated to Z with H, Y factors with Rx(pi/2); parity is
    collected by a CNOT ladder onto the highest involved qubit, which takes
    Rz(2 theta) before everything is undone.
    """
    qubits = list(p.qubits)
    basis: list[Gate] = []
    unbasis: list[Gate] = []
    for q, a in p.factors:
        if a == "X":
            basis.append(hadamard(q))
            unbasis.append(hadamard(q))
        elif a == "Y":
            basis.append(rx(q, np.pi / 2))
            unbasis.append(rx(q, -np.pi / 2))
    ladder = [cnot(a, b) for a, b in zip(qubits[:-1], qubits[1:])]
    return basis + ladder + [rz(qubits[-1], 2.0 * theta)] + ladder[::-1] + unbasis
