"""Variational quantum KAN: spline-driven Pauli exponentials and adaptive ansatz growth."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import backend
from .optimize import ObjectiveBudget, cobyla_minimize
from .pauli import OperatorPool, PauliString, apply_pauli_exponential, as_pauli, pauli_action
from .qsim import (
    ENCODINGS,
    SQRT_ACOS,
    expectation_hamiltonian,
    prepare_input_state,
    z_expectations,
)
from .spline import SplineGrid, activation_eval, refine, splines_for_epoch

log = logging.getLogger(__name__)

CONVERGENCE_LOSS = 1e-16
# way 2 only accepts a candidate that beats the current loss by more than this (relative)
IMPROVEMENT_TOL = 1e-12
GRADIENT_STEP = 1e-6


def default_hamiltonian() -> list[tuple[float, PauliString]]:
    return [(1.0, PauliString.parse("Z0*Z1")), (1.0, PauliString.parse("Z2*Z3"))]


def parse_hamiltonian(spec) -> list[tuple[float, PauliString]]:
    """Accept ``[(coef, "Z0*Z1"), ...]`` or a string like ``"Z0*Z1 + 0.5 Z2*Z3"``."""
    if isinstance(spec, str):
        terms = []
        for chunk in spec.split("+"):
            parts = chunk.split()
            if not parts:
                continue
            if len(parts) == 2:
                terms.append((float(parts[0]), PauliString.parse(parts[1])))
            else:
                terms.append((1.0, PauliString.parse(parts[0])))
        return terms
    return [(float(c), as_pauli(p)) for c, p in spec]


def sample_weights(n: int) -> np.ndarray:
    """``a_m = (N - m) / N`` for ``m = 0..N-1``."""
    return (n - np.arange(n)) / n


@dataclass
class AnsatzTerm:
    operator: PauliString
    coeffs: np.ndarray  # (num_grid, num_splines); a view into the model's coefficient table
    grid: SplineGrid


class VqkanModel:
    """Ordered Pauli-exponential terms per layer, a Hamiltonian readout and a shared spline grid."""

    def __init__(
        self,
        num_qubits: int = 4,
        num_layers: int = 1,
        hamiltonian=None,
        input_dim: int = 4,
        grid: SplineGrid | None = None,
        encoding: str = SQRT_ACOS,
        readout_qubits: Sequence[int] | None = None,
    ):
        if num_layers < 1:
            raise ValueError("need at least one layer")
        if encoding not in ENCODINGS:
            raise ValueError(f"unknown encoding {encoding!r}")
        if not 1 <= input_dim <= num_qubits:
            raise ValueError("input_dim must be between 1 and num_qubits")
        self.num_qubits = num_qubits
        self.num_layers = num_layers
        self.hamiltonian = parse_hamiltonian(hamiltonian if hamiltonian is not None else default_hamiltonian())
        if not self.hamiltonian:
            raise ValueError("empty Hamiltonian")
        self.input_dim = input_dim
        self.grid = grid if grid is not None else SplineGrid()
        self.encoding = encoding
        self.readout_qubits = tuple(range(input_dim) if readout_qubits is None else readout_qubits)
        if len(self.readout_qubits) != input_dim:
            raise ValueError("readout_qubits needs one qubit per input component")
        self.operators: list[PauliString] = []
        self.term_layers: list[int] = []
        self.coeffs = np.zeros((0, self.grid.num_basis))
        self.forward_count = 0
        self._ham_cache = None

    # -- structure -----------------------------------------------------------

    @property
    def num_terms(self) -> int:
        return len(self.operators)

    @property
    def terms(self) -> list[AnsatzTerm]:
        shape = (self.grid.num_grid, self.grid.num_splines)
        return [
            AnsatzTerm(op, self.coeffs[t].reshape(shape), self.grid)
            for t, op in enumerate(self.operators)
        ]

    @property
    def layers(self) -> list[list[AnsatzTerm]]:
        out: list[list[AnsatzTerm]] = [[] for _ in range(self.num_layers)]
        for layer, term in zip(self.term_layers, self.terms):
            out[layer].append(term)
        return out

    def add_term(self, operator, layer: int = -1, coeffs=None) -> AnsatzTerm:
        """Append a term at the end of ``layer`` (default: the last layer) with zero coefficients."""
        op = as_pauli(operator)
        if max(op.qubits) >= self.num_qubits:
            raise IndexError(f"{op} does not fit on {self.num_qubits} qubits")
        layer = layer % self.num_layers
        pos = sum(1 for l in self.term_layers if l <= layer)
        row = np.zeros(self.grid.num_basis) if coeffs is None else np.asarray(coeffs, float).reshape(-1)
        self.operators.insert(pos, op)
        self.term_layers.insert(pos, layer)
        self.coeffs = np.insert(self.coeffs, pos, row, axis=0)
        return self.terms[pos]

    def copy(self) -> "VqkanModel":
        new = VqkanModel.__new__(VqkanModel)
        new.__dict__.update(self.__dict__)
        new.operators = list(self.operators)
        new.term_layers = list(self.term_layers)
        new.coeffs = self.coeffs.copy()
        new.forward_count = 0
        return new

    def with_term(self, operator) -> "VqkanModel":
        trial = self.copy()
        trial.add_term(operator)
        return trial

    # -- parameters ------------------------------------------------------------

    @property
    def num_parameters(self) -> int:
        return self.coeffs.size

    def parameters(self) -> np.ndarray:
        return self.coeffs.ravel().copy()

    def set_parameters(self, params) -> None:
        self.coeffs[...] = np.asarray(params, dtype=float).reshape(self.coeffs.shape)

    def refine(self, new_num_splines: int) -> None:
        """Grow the spline basis and least-squares transfer every term's coefficients."""
        shape = (self.grid.num_grid, self.grid.num_splines)
        new_rows = []
        new_grid = None
        for row in self.coeffs:
            new_grid, c = refine(self.grid, row.reshape(shape), new_num_splines)
            new_rows.append(c.reshape(-1))
        if new_grid is None:
            new_grid, _ = refine(self.grid, np.zeros(shape), new_num_splines)
        self.grid = new_grid
        self.coeffs = np.array(new_rows).reshape(len(new_rows), new_grid.num_basis)

    # -- evaluation ------------------------------------------------------------

    def _hamiltonian_arrays(self):
        if self._ham_cache is None:
            actions = [pauli_action(p, self.num_qubits) for _, p in self.hamiltonian]
            self._ham_cache = (
                np.array([f for f, _ in actions], dtype=np.int64),
                np.ascontiguousarray(np.array([ph for _, ph in actions])),
                np.array([c for c, _ in self.hamiltonian], dtype=float),
            )
        return self._ham_cache

    def _kernel_args(self):
        actions = [pauli_action(op, self.num_qubits) for op in self.operators]
        dim = 1 << self.num_qubits
        flips = np.array([f for f, _ in actions], dtype=np.int64)
        phases = (
            np.ascontiguousarray(np.array([ph for _, ph in actions]))
            if actions
            else np.zeros((0, dim), dtype=np.complex128)
        )
        counts = np.bincount(np.asarray(self.term_layers, dtype=np.int64), minlength=self.num_layers)
        offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        ham_flip, ham_phase, ham_coef = self._hamiltonian_arrays()
        return (
            self.num_qubits,
            0 if self.encoding == SQRT_ACOS else 1,
            offsets,
            flips,
            phases,
            np.ascontiguousarray(self.coeffs),
            self.grid.knots,
            np.asarray(self.readout_qubits, dtype=np.int64),
            ham_flip,
            ham_phase,
            ham_coef,
        )

    def predict(self, inputs, return_layer_inputs: bool = False):
        """Batched Hamiltonian readout for rows of ``inputs`` in ``[0, 1]^input_dim``."""
        u = np.ascontiguousarray(np.atleast_2d(np.asarray(inputs, dtype=float)))
        if u.shape[1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} input components, got {u.shape[1]}")
        self.forward_count += u.shape[0]
        args = self._kernel_args()
        if return_layer_inputs:
            li = np.zeros((self.num_layers + 1, u.shape[0], self.input_dim))
            vals = backend.vqkan_forward(u, *args, li)
            return vals, li
        return backend.vqkan_forward(u, *args)


def angle_phi(term: AnsatzTerm, layer_input: Sequence[float]) -> float:
    """Sum over input components of ``2 acos(clamp(activation(x_i), -1, 1))``."""
    total = 0.0
    for x in layer_input:
        a = activation_eval(term.grid, term.coeffs, float(x))
        total += 2.0 * math.acos(min(1.0, max(-1.0, a)))
    return total


def forward(model: VqkanModel, x: Sequence[float]) -> tuple[float, list[np.ndarray]]:
    """Reference single-input forward pass on the gate-level simulator.

    Returns the Hamiltonian expectation and the input vector of every layer
    (plus the readout after the last layer).
    """
    x = np.asarray(x, dtype=float)
    model.forward_count += 1
    state = prepare_input_state(x, model.num_qubits, model.encoding)
    layer_inputs = [x]
    for layer in model.layers:
        for term in layer:
            # exp(+i phi P) == exp(-i (-phi) P)
            apply_pauli_exponential(state, term.operator, -angle_phi(term, x))
        z = z_expectations(state)
        x = 0.5 * (z[list(model.readout_qubits)] + 1.0)
        layer_inputs.append(x)
    return expectation_hamiltonian(state, model.hamiltonian), layer_inputs


def _as_arrays(samples):
    if hasattr(samples, "inputs") and hasattr(samples, "targets"):
        return np.asarray(samples.inputs, float), np.asarray(samples.targets, float)
    samples = list(samples)
    if not samples:
        raise ValueError("empty sample set")
    return (
        np.array([np.asarray(s[0], float) for s in samples]),
        np.array([float(s[1]) for s in samples]),
    )


def loss(model, samples, weights) -> float:
    """Weighted absolute distance ``sum_m a_m |<H>(x_m) - y_m|``."""
    inputs, targets = _as_arrays(samples)
    if len(targets) == 0:
        raise ValueError("empty sample set")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != targets.shape:
        raise ValueError("need one weight per sample")
    return float(np.dot(weights, np.abs(model.predict(inputs) - targets)))


LossFn = Callable[[VqkanModel, object, np.ndarray], float]


def candidate_gradient(
    model: VqkanModel,
    candidate,
    samples,
    weights,
    loss_fn: LossFn = loss,
    step: float = GRADIENT_STEP,
) -> float:
    """Largest |dL/dc| over the coefficients of ``candidate`` appended with zero coefficients."""
    trial = model.with_term(candidate)
    # appended terms land at the end of the last layer, i.e. the last row
    row = trial.coeffs[trial.num_terms - 1]
    best = 0.0
    for k in range(row.size):
        saved = row[k]
        row[k] = saved + step
        up = loss_fn(trial, samples, weights)
        row[k] = saved - step
        down = loss_fn(trial, samples, weights)
        row[k] = saved
        best = max(best, abs((up - down) / (2.0 * step)))
    return best


def grow_way1(model: VqkanModel, pool: OperatorPool, samples, weights, loss_fn: LossFn = loss):
    """Append the pool member with the steepest coefficient gradient; first member wins ties."""
    members = list(pool)
    if not members:
        raise ValueError("empty operator pool")
    scores = [candidate_gradient(model, p, samples, weights, loss_fn) for p in members]
    chosen = members[int(np.argmax(scores))]
    model.add_term(chosen)
    return chosen


def way2_losses(model: VqkanModel, pool: OperatorPool, samples, weights, loss_fn: LossFn = loss):
    """Loss with each pool member appended at zero coefficients."""
    return [loss_fn(model.with_term(p), samples, weights) for p in pool]


def grow_way2(model: VqkanModel, pool: OperatorPool, samples, weights, loss_fn: LossFn = loss):
    """Append the pool member giving the lowest loss, or nothing if none beats the current loss."""
    members = list(pool)
    if not members:
        raise ValueError("empty operator pool")
    current = loss_fn(model, samples, weights)
    losses = way2_losses(model, members, samples, weights, loss_fn)
    i = int(np.argmin(losses))
    if losses[i] < current - IMPROVEMENT_TOL * max(1.0, abs(current)):
        model.add_term(members[i])
        return members[i]
    return None


@dataclass
class AdaptiveConfig:
    way: int = 2
    epochs: int = 25
    trials_per_epoch: int = 1000
    seed: int = 0
    initial_step: float = 0.5
    final_step: float = 1e-8

    def __post_init__(self):
        if self.way not in (1, 2):
            raise ValueError(f"way must be 1 or 2, got {self.way}")
        if self.epochs < 1 or self.trials_per_epoch < 1:
            raise ValueError("epochs and trials_per_epoch must be positive")


@dataclass
class EpochRecord:
    epoch: int
    chosen_operator: str | None
    loss_before: float
    loss_after: float
    num_terms: int
    test_distance_sum: float
    num_objective_evals: int
    converged: bool = False
    test_distances: list = field(default_factory=list, repr=False)
    loss_history: list = field(default_factory=list, repr=False)
    ansatz: list = field(default_factory=list, repr=False)


def run_adaptive(
    model: VqkanModel,
    pool: OperatorPool,
    train,
    test,
    config: AdaptiveConfig,
    loss_fn: LossFn = loss,
    test_fn: Callable | None = None,
    weights=None,
) -> list[EpochRecord]:
    """Grow, re-optimise and evaluate ``model`` for ``config.epochs`` epochs.

    ``model`` arrives carrying its initial ansatz. Epoch ``tr`` first grows the
    spline basis to ``4 (tr + 2)`` splines per grid, then (for ``tr > 0``)
    appends an operator chosen by the configured way, then runs COBYLA from
    the current coefficients. Stops early once the loss reaches 1e-16.
    """
    from .problems import evaluate_test

    n_train = len(_as_arrays(train)[1])
    weights = sample_weights(n_train) if weights is None else np.asarray(weights, float)
    test_fn = test_fn or (lambda m: evaluate_test(m.predict, test))
    records: list[EpochRecord] = []
    for tr in range(config.epochs):
        started = time.perf_counter()
        ns = splines_for_epoch(tr)
        if ns > model.grid.num_splines:
            model.refine(ns)
        chosen = None
        if tr > 0:
            if config.way == 1:
                chosen = grow_way1(model, pool, train, weights, loss_fn)
            else:
                chosen = grow_way2(model, pool, train, weights, loss_fn)
        loss_before = loss_fn(model, train, weights)

        def objective(p):
            model.set_parameters(p)
            return loss_fn(model, train, weights)

        x0 = model.parameters()
        if x0.size:
            budget = ObjectiveBudget(config.trials_per_epoch, config.initial_step, config.final_step)
            res = cobyla_minimize(objective, x0, budget)
            if res.fun <= loss_before:
                model.set_parameters(res.x)
                loss_after = res.fun
            else:
                model.set_parameters(x0)
                loss_after = loss_before
            nfev, history = res.nfev, res.history
        else:
            loss_after, nfev, history = loss_before, 0, []
        per_point, total, _, _ = test_fn(model)
        converged = loss_after <= CONVERGENCE_LOSS
        records.append(
            EpochRecord(
                epoch=tr,
                chosen_operator=None if chosen is None else str(chosen),
                loss_before=loss_before,
                loss_after=loss_after,
                num_terms=model.num_terms,
                test_distance_sum=total,
                num_objective_evals=nfev,
                converged=converged,
                test_distances=list(per_point),
                loss_history=history,
                ansatz=[str(op) for op in model.operators],
            )
        )
        log.info(
            "epoch %d: op=%s loss %.6g -> %.6g terms=%d test_sum=%.4f (%.2fs)",
            tr, chosen, loss_before, loss_after, model.num_terms, total,
            time.perf_counter() - started,
        )
        if converged:
            break
    return records
