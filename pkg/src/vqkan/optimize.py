"""Derivative-free minimisation (Powell's COBYLA) and finite differences.

``cobyla_minimize`` follows the unconstrained path of Powell's COBYLA2:
a simplex of ``n + 1`` points defines a linear model, the trust-region step
is steepest descent of that model with length ``rho``, geometry steps keep
the simplex well-conditioned, and ``rho`` halves whenever progress stalls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

# Powell's constants
_ALPHA = 0.25
_BETA = 2.1
_GAMMA = 0.5
_DELTA = 1.1

# the O(n^3) inverse-accuracy check is only affordable on small simplices
_ERROR_CHECK_MAX_DIM = 100


@dataclass
class ObjectiveBudget:
    max_evals: int = 1000
    initial_step: float = 0.5
    final_step: float = 1e-8
    eval_count: int = 0

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError("max_evals must be at least 1")
        if not 0 < self.final_step < self.initial_step:
            raise ValueError("need 0 < final_step < initial_step")

    @property
    def remaining(self) -> int:
        return self.max_evals - self.eval_count


class CobylaResult(NamedTuple):
    x: np.ndarray
    fun: float
    nfev: int
    history: list


class _BudgetExhausted(Exception):
    pass


@dataclass
class _Evaluator:
    fn: Callable[[np.ndarray], float]
    budget: ObjectiveBudget
    history: list = field(default_factory=list)
    best_x: np.ndarray = None
    best_f: float = math.inf

    def __call__(self, x: np.ndarray) -> float:
        if self.budget.eval_count >= self.budget.max_evals:
            raise _BudgetExhausted
        self.budget.eval_count += 1
        f = float(self.fn(x.copy()))
        self.history.append(f)
        if f < self.best_f:
            self.best_f = f
            self.best_x = x.copy()
        return f


def cobyla_minimize(
    objective: Callable[[np.ndarray], float],
    x0,
    budget: ObjectiveBudget | None = None,
) -> CobylaResult:
    """Minimise ``objective`` from ``x0`` within ``budget.max_evals`` evaluations.

    Returns the best point ever evaluated, its value, the number of
    evaluations used and the value of every evaluation in order.
    """
    budget = budget if budget is not None else ObjectiveBudget()
    x0 = np.array(x0, dtype=float).ravel()
    ev = _Evaluator(objective, budget)
    start = budget.eval_count
    f0 = ev(x0)
    if not math.isfinite(f0):
        raise ValueError(f"objective is not finite at x0 ({f0})")
    try:
        if x0.size + 1 > budget.remaining + 1:
            _probe_coordinates(ev, x0, f0, budget.initial_step)
        else:
            _cobyla(ev, x0, f0, budget.initial_step, budget.final_step)
    except _BudgetExhausted:
        pass
    return CobylaResult(ev.best_x, ev.best_f, budget.eval_count - start, ev.history)


def _probe_coordinates(ev: _Evaluator, x0: np.ndarray, f0: float, rho: float) -> None:
    """Initial-simplex phase alone, for budgets that end before the simplex is complete."""
    pole = x0.copy()
    fpole = f0
    for j in range(x0.size):
        x = pole.copy()
        x[j] += rho
        f = ev(x)
        if f < fpole:
            pole, fpole = x, f


def _cobyla(ev: _Evaluator, x0: np.ndarray, f0: float, rho: float, rhoend: float) -> None:
    n = x0.size
    pole = x0.copy()  # optimal vertex
    fpole = f0
    sim = rho * np.eye(n)  # column j: vertex j minus the pole
    simi = np.eye(n) / rho  # inverse of sim
    fval = np.zeros(n)

    # initial simplex
    for j in range(n):
        x = pole.copy()
        x[j] += rho
        f = ev(x)
        if fpole <= f:
            fval[j] = f
        else:
            # pole moves to the new point; the old pole becomes vertex j
            fval[j] = fpole
            fpole = f
            pole = x
            sim[j, : j + 1] = -rho
            for k in range(j + 1):
                simi[j, k] = -np.sum(simi[k : j + 1, k])

    trial_pending = True  # IBRNCH = 1 in Powell's notation
    while True:
        # best vertex into pole position
        nbest = -1
        fmin = fpole
        for j in range(n):
            if fval[j] < fmin:
                nbest, fmin = j, fval[j]
        if nbest >= 0:
            fval[nbest], fpole = fpole, fval[nbest]
            shift = sim[:, nbest].copy()
            sim[:, nbest] = 0.0
            pole = pole + shift
            sim -= shift[:, None]
            simi[nbest, :] = -simi.sum(axis=0)

        if n <= _ERROR_CHECK_MAX_DIM:
            err = np.max(np.abs(simi @ sim - np.eye(n)))
            if err > 0.1:
                return  # rounding has destroyed the simplex inverse

        grad = (fval - fpole) @ simi
        parsig = _ALPHA * rho
        pareta = _BETA * rho
        vsig = 1.0 / np.sqrt(np.sum(simi**2, axis=1))
        veta = np.sqrt(np.sum(sim**2, axis=0))
        acceptable = not (np.any(vsig < parsig) or np.any(veta > pareta))

        if not trial_pending and not acceptable:
            # geometry step: replace the vertex spoiling the simplex
            jdrop, temp = -1, pareta
            for j in range(n):
                if veta[j] > temp:
                    jdrop, temp = j, veta[j]
            if jdrop < 0:
                for j in range(n):
                    if vsig[j] < temp:
                        jdrop, temp = j, vsig[j]
            dx = _GAMMA * rho * vsig[jdrop] * simi[jdrop, :]
            if grad @ dx > 0.0:
                dx = -dx
            _replace_vertex(sim, simi, jdrop, dx)
            fval[jdrop] = ev(pole + dx)
            trial_pending = True
            continue

        # trust-region step along the model's steepest descent
        gnorm = math.sqrt(float(grad @ grad))
        trial_pending = True
        if gnorm > 0.0:
            dx = -(rho / gnorm) * grad
            prerem = -float(grad @ dx)
            f = ev(pole + dx)
            trured = fpole - f
            if f == fpole:
                prerem = 0.0
                trured = 0.0

            ratio = 1.0 if trured <= 0.0 else 0.0
            jdrop = -1
            proj = np.abs(simi @ dx)
            for j in range(n):
                if proj[j] > ratio:
                    jdrop, ratio = j, proj[j]
            sigbar = proj * vsig
            edgmax = _DELTA * rho
            ell = -1
            for j in range(n):
                if sigbar[j] >= parsig or sigbar[j] >= vsig[j]:
                    temp = veta[j]
                    if trured > 0.0:
                        temp = math.sqrt(float(np.sum((dx - sim[:, j]) ** 2)))
                    if temp > edgmax:
                        ell, edgmax = j, temp
            if ell >= 0:
                jdrop = ell
            if jdrop >= 0:
                _replace_vertex(sim, simi, jdrop, dx)
                fval[jdrop] = f
                if trured > 0.0 and trured >= 0.1 * prerem:
                    continue

        if not acceptable:
            trial_pending = False
            continue
        if rho > rhoend:
            rho *= 0.5
            if rho <= 1.5 * rhoend:
                rho = rhoend
            continue
        return


def _replace_vertex(sim: np.ndarray, simi: np.ndarray, jdrop: int, dx: np.ndarray) -> None:
    sim[:, jdrop] = dx
    simi[jdrop, :] /= simi[jdrop, :] @ dx
    others = simi @ dx
    others[jdrop] = 0.0
    simi -= np.outer(others, simi[jdrop, :])


def central_difference(f: Callable[[float], float], x: float, h: float) -> float:
    if h <= 0:
        raise ValueError("step must be positive")
    return (f(x + h) - f(x - h)) / (2.0 * h)


def second_central_difference(f: Callable[[float], float], x: float, h: float) -> float:
    if h < 1e-6:
        raise ValueError("step below 1e-6 loses the second difference to cancellation")
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
