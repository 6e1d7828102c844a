"""Benchmark problems: function fitting, 2-D classification and the 1-D heat equation."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .qsim import ACOS, SQRT_ACOS

FITTING = "fitting"
CLASSIFICATION = "classification"
HEAT = "heat"
PROBLEM_KINDS = (FITTING, CLASSIFICATION, HEAT)

# fitting targets
EXP_SIN = "exp_sin"  # exp(sin(x0^2 + x1^2) + sin(x2^2 + x3^2))
EXPONENTIAL = "exponential"
LOGARITHMIC = "logarithmic"
FRACTIONAL = "fractional"
SPHERE = "sphere"
FITTING_TARGETS = (EXP_SIN, EXPONENTIAL, LOGARITHMIC, FRACTIONAL, SPHERE)

HEAT_TERMS = 10
HEAT_T_MAX = 1.0
HEAT_DELTA = 1e-4


@dataclass
class SampleSet:
    raw: np.ndarray  # problem coordinates
    inputs: np.ndarray  # mapped into [0, 1]^input_dim
    targets: np.ndarray

    def __len__(self) -> int:
        return len(self.targets)

    def __iter__(self):
        return iter(zip(self.inputs, self.targets))


# -- fitting -------------------------------------------------------------------


def fitting_coordinates(target_id: str, u) -> np.ndarray:
    """Map unit-interval inputs to target coordinates: ``x = 2u - 1`` (``x0 = 1 - 2u0`` for the exponential)."""
    x = 2.0 * np.asarray(u, dtype=float) - 1.0
    if target_id == EXPONENTIAL:
        x = x.copy()
        x[..., 0] = -x[..., 0]
    return x


def fitting_target(target_id: str, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    if target_id == EXP_SIN:
        return math.exp(math.sin(x[0] ** 2 + x[1] ** 2) + math.sin(x[2] ** 2 + x[3] ** 2))
    if target_id == EXPONENTIAL:
        if x[0] == 0.0:
            raise ZeroDivisionError("exponential target is singular at x0 = 0")
        return math.exp((x[1] - x[2]) ** 2 / (2.0 * x[0]))
    if target_id == LOGARITHMIC:
        if x[1] == 0.0 or x[0] / x[1] <= 0.0:
            raise ValueError("logarithmic target needs x0 / x1 > 0")
        return math.log(x[0] / x[1])
    if target_id == FRACTIONAL:
        return 1.0 / (1.0 + x[0] * x[1])
    if target_id == SPHERE:
        return math.sqrt(float(np.sum(x[:4] ** 2)))
    raise ValueError(f"unknown fitting target {target_id!r}")


# -- classification -------------------------------------------------------------


def classification_coordinates(u) -> np.ndarray:
    """``x = 2 sqrt(u) - 1`` so coordinates cover [-1, 1]."""
    return 2.0 * np.sqrt(np.asarray(u, dtype=float)) - 1.0


def classification_boundary(d: Sequence[float], x0: float) -> float:
    d = [float(v) for v in d]
    if len(d) != 8:
        raise ValueError("the boundary needs 8 coefficients")
    return (
        math.exp(d[0] * x0 + d[1])
        + d[2] * math.sqrt(max(0.0, 1.0 - d[3] * x0 * x0))
        + math.cos(d[4] * x0 + d[5])
        + math.sin(d[6] * x0 + d[7])
    )


def classification_label(d: Sequence[float], x0: float, x1: float) -> int:
    """-1 on or below the boundary (``f(x0) >= x1``), +1 above it."""
    return -1 if classification_boundary(d, x0) >= x1 else 1


def classification_accuracy(predict: Callable, samples: SampleSet) -> float:
    """Fraction of samples whose output, thresholded at 0, has the label's sign."""
    pred = np.where(np.asarray(predict(samples.inputs)) >= 0.0, 1, -1)
    return float(np.mean(pred == samples.targets))


# -- heat equation --------------------------------------------------------------


def heat_exact(x: float, t: float, num_terms: int = HEAT_TERMS) -> float:
    """Truncated series solution of u_t = u_xx on [0, pi] with the triangular initial profile.

    Every odd-order mode is symmetric about pi/2, so the series is evaluated at ``min(x, pi - x)``;
    this makes both boundary values exactly zero in floating point.
    """
    if not 0.0 <= x <= math.pi:
        raise ValueError(f"x = {x} outside [0, pi]")
    if t < 0.0:
        raise ValueError(f"t = {t} is negative")
    x = min(x, math.pi - x)
    total = 0.0
    for k in range(num_terms):
        n = 2 * k + 1
        total += (-1) ** k / n**2 * math.exp(-n * n * t) * math.sin(n * x)
    return 4.0 / math.pi * total


def heat_input_map(raw) -> np.ndarray:
    """``(x, t) -> (x / pi, t / t_max)``, clipped to [0, 1] for stencil points past the edges."""
    raw = np.asarray(raw, dtype=float)
    u = np.stack([raw[..., 0] / math.pi, raw[..., 1] / HEAT_T_MAX], axis=-1)
    return np.clip(u, 0.0, 1.0)


def heat_stencil(raw, delta: float = HEAT_DELTA) -> np.ndarray:
    """Rows: centres, then x+d, x-d, t+d, t-d (five blocks of len(raw))."""
    raw = np.asarray(raw, dtype=float)
    dx = np.array([delta, 0.0])
    dt = np.array([0.0, delta])
    return np.concatenate([raw, raw + dx, raw - dx, raw + dt, raw - dt])


def heat_loss(model, samples: SampleSet, weights, delta: float = HEAT_DELTA) -> float:
    """``sum_m a_m (|u - u_exact| + |u_t - u_xx|)`` from five model evaluations per sample."""
    k = len(samples)
    if k == 0:
        raise ValueError("empty sample set")
    vals = model.predict(heat_input_map(heat_stencil(samples.raw, delta)))
    u0, xp, xm, tp, tm = vals.reshape(5, k)
    u_t = (tp - tm) / (2.0 * delta)
    u_xx = (xp - 2.0 * u0 + xm) / (delta * delta)
    residual = np.abs(u0 - samples.targets) + np.abs(u_t - u_xx)
    return float(np.dot(np.asarray(weights, dtype=float), residual))


# -- problem definitions ---------------------------------------------------------


@dataclass
class ProblemSpec:
    kind: str = FITTING
    target: str = EXP_SIN
    train_count: int = 10
    test_count: int = 50
    rng_seed: int = 0
    classification_coeffs: Sequence[float] | None = None
    hamiltonian: str = "Z0*Z1 + Z2*Z3"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.kind == FITTING and self.target not in FITTING_TARGETS:
            raise ValueError(f"unknown fitting target {self.target!r}")
        if self.train_count < 1 or self.test_count < 1:
            raise ValueError("train and test sets must be non-empty")

    @property
    def name(self) -> str:
        return f"{self.kind}:{self.target}" if self.kind == FITTING else self.kind

    @property
    def input_dim(self) -> int:
        return 4 if self.kind == FITTING else 2

    @property
    def encoding(self) -> str:
        return ACOS if self.kind == HEAT else SQRT_ACOS

    @property
    def qnn_input_scale(self) -> float:
        """Rx angle per unit input: 2 generally, 1 for the heat equation."""
        return 1.0 if self.kind == HEAT else 2.0

    def loss_fn(self):
        if self.kind == HEAT:
            return heat_loss
        from .model import loss

        return loss

    def coefficients(self, rng: np.random.Generator | None = None) -> np.ndarray:
        if self.classification_coeffs is not None:
            return np.asarray(self.classification_coeffs, dtype=float)
        rng = rng or np.random.default_rng(self.rng_seed)
        return rng.uniform(0.0, 1.0, size=8)


def _draw_fitting(spec: ProblemSpec, rng, count: int):
    raws, ins, ys = [], [], []
    while len(ys) < count:
        u = rng.uniform(0.0, 1.0, size=4)
        try:
            y = fitting_target(spec.target, fitting_coordinates(spec.target, u))
        except (ZeroDivisionError, ValueError, OverflowError):
            continue
        if not math.isfinite(y):
            continue
        raws.append(u)
        ins.append(u)
        ys.append(y)
    return np.array(raws), np.array(ins), np.array(ys)


def _draw_classification(d, rng, count: int):
    u = rng.uniform(0.0, 1.0, size=(count, 2))
    x = classification_coordinates(u)
    y = np.array([classification_label(d, a, b) for a, b in x], dtype=float)
    return x, u, y


def _draw_heat(rng, count: int):
    raw = np.column_stack(
        [rng.uniform(0.0, math.pi, size=count), rng.uniform(0.0, HEAT_T_MAX, size=count)]
    )
    y = np.array([heat_exact(x, t) for x, t in raw])
    return raw, heat_input_map(raw), y


def make_dataset(spec: ProblemSpec) -> tuple[SampleSet, SampleSet]:
    """Seeded hold-out split: the first ``train_count`` draws train, the rest test."""
    rng = np.random.default_rng(spec.rng_seed)
    total = spec.train_count + spec.test_count
    if spec.kind == FITTING:
        raw, u, y = _draw_fitting(spec, rng, total)
    elif spec.kind == CLASSIFICATION:
        raw, u, y = _draw_classification(spec.coefficients(rng), rng, total)
    else:
        raw, u, y = _draw_heat(rng, total)
    n = spec.train_count
    train = SampleSet(raw[:n], u[:n], y[:n])
    test = SampleSet(raw[n:], u[n:], y[n:])
    return train, test


def evaluate_test(predict: Callable, test: SampleSet):
    """Per-point absolute distances and their sum, mean and median."""
    if len(test) == 0:
        raise ValueError("empty test set")
    dist = np.abs(np.asarray(predict(test.inputs), dtype=float) - test.targets)
    return dist, float(np.sum(dist)), float(np.mean(dist)), float(np.median(dist))


def write_dataset_csv(path, samples: SampleSet) -> None:
    path = Path(path)
    raw_cols = [f"raw_{i}" for i in range(samples.raw.shape[1])]
    in_cols = [f"input_{i}" for i in range(samples.inputs.shape[1])]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(raw_cols + in_cols + ["target"])
        for r, u, y in zip(samples.raw, samples.inputs, samples.targets):
            w.writerow([repr(float(v)) for v in r] + [repr(float(v)) for v in u] + [repr(float(y))])


def read_dataset_csv(path) -> SampleSet:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    n_raw = sum(1 for h in header if h.startswith("raw_"))
    n_in = sum(1 for h in header if h.startswith("input_"))
    return SampleSet(body[:, :n_raw], body[:, n_raw : n_raw + n_in], body[:, -1])
