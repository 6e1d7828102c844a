"""Command line entry point: ``vqkan run`` and ``vqkan compare``."""
from __future__ import annotations

import argparse
import logging
import sys

from .experiment import RunConfig, compare, format_comparison, load_summary, run

# flag -> RunConfig field
_OVERRIDES = {
    "problem": "problem",
    "target": "target",
    "method": "method",
    "way": "way",
    "pool": "pool",
    "initial_ansatz": "initial_ansatz",
    "layers": "num_layers",
    "epochs": "epochs",
    "trials": "trials",
    "attempts": "attempts",
    "seed": "seed",
    "out": "output_dir",
    "jobs": "jobs",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqkan", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a multi-attempt experiment")
    r.add_argument("--config", help="YAML file with RunConfig keys; flags override it")
    r.add_argument("--problem", help="fitting, classification or heat (fitting:<target> also accepted)")
    r.add_argument("--target", help="fitting target: exp_sin, exponential, logarithmic, fractional, sphere")
    r.add_argument("--method", choices=("adaptive", "qnn"))
    r.add_argument("--way", type=int, choices=(1, 2))
    r.add_argument("--pool", choices=("restricted", "extended"))
    r.add_argument("--initial-ansatz", help='Pauli string such as "X0" or "Z0*Z1"')
    r.add_argument("--layers", type=int)
    r.add_argument("--epochs", type=int)
    r.add_argument("--trials", type=int, help="objective evaluations per optimisation")
    r.add_argument("--attempts", type=int)
    r.add_argument("--seed", type=int, help="attempt k uses seed + k")
    r.add_argument("--out", help="output directory")
    r.add_argument("--jobs", type=int, help="attempts run in parallel")

    c = sub.add_parser("compare", help="compare two finished runs")
    c.add_argument("run_a", help="output directory or summary.json")
    c.add_argument("run_b", help="output directory or summary.json")
    return parser


def _config_from_args(args) -> RunConfig:
    data = {}
    if args.config:
        data = RunConfig.from_file(args.config).to_dict()
    for flag, key in _OVERRIDES.items():
        value = getattr(args, flag)
        if value is not None:
            data[key] = value
    return RunConfig.from_dict(data)


def _print_run(record) -> None:
    agg = record.summary()["aggregate"]
    print(
        f"attempts={len(record.attempts)} test-sum mean={agg['test_sum_mean']:.4f} "
        f"median={agg['test_sum_median']:.4f} min={agg['test_sum_min']:.4f} "
        f"max={agg['test_sum_max']:.4f} never-grew={agg['attempts_never_grew']}"
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "run":
            config = _config_from_args(args)
            record = run(config)
            _print_run(record)
            print(f"wrote {config.output_dir}")
        else:
            a, b = load_summary(args.run_a), load_summary(args.run_b)
            print(format_comparison(compare(a, b), a["config"]["method"] + "(a)", b["config"]["method"] + "(b)"))
    except (ValueError, OSError) as exc:
        print(f"vqkan: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
