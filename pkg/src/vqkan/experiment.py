"""Multi-attempt experiment runner: trains, evaluates and writes CSV / JSON outputs."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from . import backend
from .model import AdaptiveConfig, VqkanModel, run_adaptive, sample_weights
from .optimize import ObjectiveBudget
from .pauli import POOL_FLAVORS, RESTRICTED, PauliString, generate_pool
from .problems import (
    CLASSIFICATION,
    FITTING,
    FITTING_TARGETS,
    HEAT,
    PROBLEM_KINDS,
    ProblemSpec,
    classification_accuracy,
    evaluate_test,
    make_dataset,
)
from .qnn import QnnModel, qnn_train

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
ADAPTIVE = "adaptive"
QNN = "qnn"
METHODS = (ADAPTIVE, QNN)
NUM_QUBITS = 4

EPOCH_COLUMNS = ("attempt", "epoch", "loss_before", "loss_after", "chosen_operator", "num_terms", "test_sum")
POINT_COLUMNS = ("attempt", "point", "distance")
PLOT_COLUMNS = ("curve", "x", "y")


@dataclass
class RunConfig:
    problem: str = FITTING
    target: str = "exp_sin"
    method: str = ADAPTIVE
    way: int = 2
    pool: str = RESTRICTED
    initial_ansatz: str | None = None  # None picks the problem default
    num_layers: int = 1
    epochs: int = 25
    trials: int = 1000
    attempts: int = 10
    seed: int = 0
    train_count: int = 10
    test_count: int = 50
    output_dir: str = "runs/default"
    jobs: int = 1

    def __post_init__(self):
        if ":" in self.problem:
            self.problem, self.target = self.problem.split(":", 1)
        if self.problem not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem {self.problem!r}; choose from {PROBLEM_KINDS}")
        if self.problem == FITTING and self.target not in FITTING_TARGETS:
            raise ValueError(f"unknown fitting target {self.target!r}; choose from {FITTING_TARGETS}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.way not in (1, 2):
            raise ValueError("way must be 1 or 2")
        if self.pool not in POOL_FLAVORS:
            raise ValueError(f"unknown pool {self.pool!r}; choose from {POOL_FLAVORS}")
        for name in ("epochs", "trials", "attempts", "num_layers", "jobs", "train_count", "test_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.initial_ansatz is None:
            self.initial_ansatz = "Z0" if self.problem == HEAT else "X0"
        op = PauliString.parse(self.initial_ansatz)  # raises on malformed text
        if max(op.qubits) >= NUM_QUBITS:
            raise ValueError(f"initial ansatz {op} does not fit on {NUM_QUBITS} qubits")
        if self.method == QNN:
            log.info("way, pool, initial_ansatz and epochs are ignored for the QNN method")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        data = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a mapping at the top level")
        # nested sections are flattened: {problem: {kind: fitting, target: exp_sin}}
        if isinstance(data.get("problem"), dict):
            sub = data.pop("problem")
            data["problem"] = sub.get("kind", FITTING)
            if "target" in sub:
                data["target"] = sub["target"]
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def problem_spec(self, attempt: int) -> ProblemSpec:
        return ProblemSpec(
            kind=self.problem,
            target=self.target,
            train_count=self.train_count,
            test_count=self.test_count,
            rng_seed=self.seed + attempt,
        )


@dataclass
class AttemptResult:
    attempt: int
    seed: int
    rows: list  # one dict per epoch, EPOCH_COLUMNS keys
    test_distances: list
    loss_history: list
    num_objective_evals: int
    num_parametric_gates: int
    ansatz: list
    wall_time: float
    accuracy: float | None = None


@dataclass
class RunRecord:
    config: dict
    attempts: list = field(default_factory=list)

    @property
    def final_test_sums(self) -> list[float]:
        return [float(np.sum(a.test_distances)) for a in self.attempts]

    def summary(self) -> dict:
        sums = np.array(self.final_test_sums)
        per_attempt = []
        for a, s in zip(self.attempts, sums):
            grown = [r["chosen_operator"] for r in a.rows if r["chosen_operator"]]
            per_attempt.append(
                {
                    "attempt": a.attempt,
                    "seed": a.seed,
                    "final_test_sum": float(s),
                    "final_test_mean": float(np.mean(a.test_distances)),
                    "final_test_median": float(np.median(a.test_distances)),
                    "min_epoch_test_sum": min(r["test_sum"] for r in a.rows),
                    "final_loss": a.rows[-1]["loss_after"],
                    "epochs_run": len(a.rows),
                    "operators_added": len(grown),
                    "ansatz": a.ansatz,
                    "num_parametric_gates": a.num_parametric_gates,
                    "num_objective_evals": a.num_objective_evals,
                    "accuracy": a.accuracy,
                    "wall_time_s": round(a.wall_time, 3),
                }
            )
        return {
            "schema_version": SCHEMA_VERSION,
            "backend": backend.NAME,
            "config": self.config,
            "aggregate": {
                "test_sum_mean": float(np.mean(sums)),
                "test_sum_median": float(np.median(sums)),
                "test_sum_min": float(np.min(sums)),
                "test_sum_max": float(np.max(sums)),
                "best_attempt": int(self.attempts[int(np.argmin(sums))].attempt),
                "objective_evals_mean": float(np.mean([a.num_objective_evals for a in self.attempts])),
                "parametric_gates_mean": float(np.mean([a.num_parametric_gates for a in self.attempts])),
                "attempts_never_grew": sum(
                    1 for a in self.attempts if not any(r["chosen_operator"] for r in a.rows)
                ),
            },
            "attempts": per_attempt,
        }


def _make_adaptive_model(config: RunConfig, spec: ProblemSpec) -> VqkanModel:
    model = VqkanModel(
        num_qubits=NUM_QUBITS,
        num_layers=config.num_layers,
        hamiltonian=spec.hamiltonian,
        input_dim=spec.input_dim,
        encoding=spec.encoding,
    )
    model.add_term(config.initial_ansatz, layer=0)
    return model


def run_attempt(config: RunConfig, attempt: int) -> AttemptResult:
    """One seeded attempt; depends only on ``config`` and ``attempt``."""
    started = time.perf_counter()
    spec = config.problem_spec(attempt)
    train, test = make_dataset(spec)
    loss_fn = spec.loss_fn()
    weights = sample_weights(len(train))
    if config.method == ADAPTIVE:
        model = _make_adaptive_model(config, spec)
        pool = generate_pool(NUM_QUBITS, config.pool)
        adaptive = AdaptiveConfig(way=config.way, epochs=config.epochs, trials_per_epoch=config.trials)
        records = run_adaptive(model, pool, train, test, adaptive, loss_fn=loss_fn, weights=weights)
        rows = [
            {
                "attempt": attempt,
                "epoch": r.epoch,
                "loss_before": r.loss_before,
                "loss_after": r.loss_after,
                "chosen_operator": r.chosen_operator or "",
                "num_terms": r.num_terms,
                "test_sum": r.test_distance_sum,
            }
            for r in records
        ]
        history = [v for r in records for v in r.loss_history]
        evals = sum(r.num_objective_evals for r in records)
        gates = model.num_terms
        ansatz = [str(op) for op in model.operators]
    else:
        model = QnnModel(
            num_qubits=NUM_QUBITS,
            input_scale=spec.qnn_input_scale,
            hamiltonian=spec.hamiltonian,
            seed=np.random.SeedSequence([config.seed + attempt, 1]).generate_state(1)[0],
        )
        loss_before = loss_fn(model, train, weights)
        budget = ObjectiveBudget(max_evals=config.trials)
        model, history = qnn_train(model, train, weights, budget, loss_fn=loss_fn)
        rows = [
            {
                "attempt": attempt,
                "epoch": 0,
                "loss_before": loss_before,
                "loss_after": min(history),
                "chosen_operator": "",
                "num_terms": 0,
                "test_sum": evaluate_test(model.predict, test)[1],
            }
        ]
        evals = budget.eval_count
        gates = model.num_parametric_gates
        ansatz = []
    per_point = evaluate_test(model.predict, test)[0]
    accuracy = classification_accuracy(model.predict, test) if config.problem == CLASSIFICATION else None
    return AttemptResult(
        attempt=attempt,
        seed=config.seed + attempt,
        rows=rows,
        test_distances=[float(v) for v in per_point],
        loss_history=[float(v) for v in history],
        num_objective_evals=evals,
        num_parametric_gates=gates,
        ansatz=ansatz,
        wall_time=time.perf_counter() - started,
        accuracy=accuracy,
    )


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _curve_rows(name: str, ys) -> list:
    return [(name, i, y) for i, y in enumerate(ys)]


def _stat_curves(series: list[list[float]]) -> list:
    """Mean, median, min and max across attempts, per x; ragged series use what is present."""
    rows = []
    length = max(len(s) for s in series)
    for stat, fn in (("mean", np.mean), ("median", np.median), ("min", np.min), ("max", np.max)):
        ys = [fn([s[i] for s in series if i < len(s)]) for i in range(length)]
        rows.extend(_curve_rows(stat, ys))
    return rows


def write_outputs(record: RunRecord, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "epochs.csv",
        EPOCH_COLUMNS,
        ([r[c] for c in EPOCH_COLUMNS] for a in record.attempts for r in a.rows),
    )
    _write_csv(
        out / "test_points.csv",
        POINT_COLUMNS,
        ((a.attempt, i, d) for a in record.attempts for i, d in enumerate(a.test_distances)),
    )
    plots = out / "plots"
    plots.mkdir(exist_ok=True)
    loss_epoch = [[r["loss_after"] for r in a.rows] for a in record.attempts]
    sum_epoch = [[r["test_sum"] for r in a.rows] for a in record.attempts]
    dist = [a.test_distances for a in record.attempts]
    curves = {
        "loss_vs_epoch.csv": [
            row for a, ys in zip(record.attempts, loss_epoch) for row in _curve_rows(f"attempt_{a.attempt}", ys)
        ]
        + _stat_curves(loss_epoch),
        "test_sum_vs_epoch.csv": [
            row for a, ys in zip(record.attempts, sum_epoch) for row in _curve_rows(f"attempt_{a.attempt}", ys)
        ]
        + _stat_curves(sum_epoch),
        "loss_vs_trial.csv": [
            row
            for a in record.attempts
            for row in _curve_rows(f"attempt_{a.attempt}", a.loss_history)
        ],
        "test_distance_vs_point.csv": _stat_curves(dist),
    }
    for name, rows in curves.items():
        _write_csv(plots / name, PLOT_COLUMNS, rows)
    (out / "summary.json").write_text(json.dumps(record.summary(), indent=2, sort_keys=True) + "\n")


def run(config: RunConfig, write: bool = True) -> RunRecord:
    """Run every attempt (seed ``config.seed + attempt``) and write results under ``config.output_dir``."""
    out = Path(config.output_dir)
    if write:
        out.mkdir(parents=True, exist_ok=True)  # fail early on unwritable paths
    attempts = range(config.attempts)
    if config.jobs > 1 and config.attempts > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(run_attempt, [config] * config.attempts, attempts))
    else:
        results = [run_attempt(config, a) for a in attempts]
    # results come back in attempt order whatever the scheduling
    record = RunRecord(config=config.to_dict(), attempts=results)
    if write:
        write_outputs(record, out)
    return record


def load_summary(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "summary.json"
    data = json.loads(path.read_text())
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema version {data.get('schema_version')}")
    return data


COMPARE_METRICS = (
    ("test_sum_mean", "mean test-distance sum"),
    ("test_sum_median", "median test-distance sum"),
    ("test_sum_min", "min test-distance sum"),
    ("objective_evals_mean", "objective evaluations"),
    ("parametric_gates_mean", "parametric gates"),
)


def _problem_key(summary: dict) -> tuple:
    cfg = summary["config"]
    target = cfg["target"] if cfg["problem"] == FITTING else None
    return cfg["problem"], target, cfg["train_count"], cfg["test_count"], cfg["seed"]


def compare(summary_a: dict, summary_b: dict) -> list[dict]:
    """Per-metric values, delta (b - a) and winner (lower is better everywhere)."""
    if _problem_key(summary_a) != _problem_key(summary_b):
        raise ValueError("records were produced on different problems or datasets")
    rows = []
    for key, label in COMPARE_METRICS:
        a = summary_a["aggregate"][key]
        b = summary_b["aggregate"][key]
        winner = "tie" if a == b else ("a" if a < b else "b")
        rows.append({"metric": label, "a": a, "b": b, "delta": b - a, "winner": winner})
    return rows


def format_comparison(rows: list[dict], name_a: str = "a", name_b: str = "b") -> str:
    width = max(len(r["metric"]) for r in rows)
    lines = [f"{'metric':<{width}}  {name_a:>14}  {name_b:>14}  {'delta':>12}  winner"]
    for r in rows:
        who = {"a": name_a, "b": name_b, "tie": "tie"}[r["winner"]]
        lines.append(f"{r['metric']:<{width}}  {r['a']:>14.6g}  {r['b']:>14.6g}  {r['delta']:>12.4g}  {who}")
    return "\n".join(lines)
