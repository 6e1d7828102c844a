"""Baseline layered quantum neural network with Rx data re-uploading."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import backend
from .model import default_hamiltonian, loss, parse_hamiltonian
from .optimize import ObjectiveBudget, cobyla_minimize
from .pauli import pauli_action
from .qsim import apply_gate, cz, expectation_hamiltonian, rx, ry, zero_state


class QnnModel:
    """``num_layers`` blocks of Ry, CZ chain, Rx(input), Ry, CZ chain; 2 * num_qubits angles per block."""

    def __init__(
        self,
        thetas=None,
        num_qubits: int = 4,
        num_layers: int = 3,
        input_scale: float = 2.0,
        hamiltonian=None,
        seed: int | None = None,
    ):
        self.num_qubits = num_qubits
        self.num_layers = num_layers
        self.input_scale = float(input_scale)
        self.hamiltonian = parse_hamiltonian(hamiltonian if hamiltonian is not None else default_hamiltonian())
        n = self.num_parameters
        if thetas is None:
            thetas = np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi, size=n)
        thetas = np.asarray(thetas, dtype=float).ravel()
        if thetas.size != n:
            raise ValueError(f"expected {n} thetas, got {thetas.size}")
        self.thetas = thetas.copy()
        self.forward_count = 0
        actions = [pauli_action(p, num_qubits) for _, p in self.hamiltonian]
        self._ham = (
            np.array([f for f, _ in actions], dtype=np.int64),
            np.ascontiguousarray(np.array([ph for _, ph in actions])),
            np.array([c for c, _ in self.hamiltonian], dtype=float),
        )

    @property
    def num_parameters(self) -> int:
        return 2 * self.num_qubits * self.num_layers

    def parameters(self) -> np.ndarray:
        return self.thetas.copy()

    def set_parameters(self, params) -> None:
        params = np.asarray(params, dtype=float).ravel()
        if params.size != self.num_parameters:
            raise ValueError(f"expected {self.num_parameters} thetas, got {params.size}")
        self.thetas[:] = params

    def rx_angles(self, inputs) -> np.ndarray:
        """Qubit ``q`` takes ``input_scale * u[q mod d]``."""
        u = np.atleast_2d(np.asarray(inputs, dtype=float))
        cols = [q % u.shape[1] for q in range(self.num_qubits)]
        return self.input_scale * u[:, cols]

    def predict(self, inputs) -> np.ndarray:
        angles = np.ascontiguousarray(self.rx_angles(inputs))
        self.forward_count += angles.shape[0]
        return backend.qnn_forward(angles, np.ascontiguousarray(self.thetas), self.num_layers, *self._ham)

    @property
    def num_parametric_gates(self) -> int:
        return self.num_parameters


def qnn_forward(model: QnnModel, inputs: Sequence[float]) -> float:
    """Gate-level reference forward pass for one input row."""
    angles = model.rx_angles(inputs)[0]
    n = model.num_qubits
    state = zero_state(n)
    for layer in range(model.num_layers):
        base = 2 * n * layer
        for q in range(n):
            apply_gate(state, ry(q, model.thetas[base + q]))
        for q in range(n - 1):
            apply_gate(state, cz(q, q + 1))
        for q in range(n):
            apply_gate(state, rx(q, angles[q]))
        for q in range(n):
            apply_gate(state, ry(q, model.thetas[base + n + q]))
        for q in range(n - 1):
            apply_gate(state, cz(q, q + 1))
    model.forward_count += 1
    return expectation_hamiltonian(state, model.hamiltonian)


def qnn_train(model: QnnModel, samples, weights, budget: ObjectiveBudget | None = None, loss_fn=loss):
    """COBYLA over the rotation angles. Returns the model (at its best point) and every loss evaluated."""
    budget = budget if budget is not None else ObjectiveBudget()

    def objective(p):
        model.set_parameters(p)
        return loss_fn(model, samples, weights)

    res = cobyla_minimize(objective, model.parameters(), budget)
    model.set_parameters(res.x)
    return model, res.history
