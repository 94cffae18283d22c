"""Command-line entry points for the experiment harness.

Verbs mirror the evaluation workflow: `train` emits learning curves,
`compare` evaluates the learned policy against the two baselines on shared
task streams, `sweep` varies the computation-intensity or propagation
coefficient, and `breakdown` splits delays by priority class. Each verb
takes --config/--out/--seed/--replicas and exits nonzero with a diagnostic
on any config or runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .experiments import (
    ConfigError,
    ExperimentConfig,
    run_comparison,
    run_sensitivity,
    run_training,
    run_weight_breakdown,
)
from .sim import SimulationError


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.replicas is not None and args.replicas < 1:
        raise ConfigError("--replicas must be at least 1")
    if args.seed is not None:
        n = args.replicas if args.replicas is not None else len(cfg.seeds)
        cfg.seeds = list(range(args.seed, args.seed + n))
    elif args.replicas is not None:
        cfg.seeds = cfg.seeds[: args.replicas]
        if len(cfg.seeds) < args.replicas:
            base = (cfg.seeds[-1] if cfg.seeds else 0) + 1
            cfg.seeds += list(range(base, base + args.replicas - len(cfg.seeds)))
    return cfg


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML experiment config (defaults used if omitted)")
    parser.add_argument("--out", default="results", help="output directory for CSV/JSON tables")
    parser.add_argument("--seed", type=int, help="first replica seed (overrides config seeds)")
    parser.add_argument("--replicas", type=int, help="number of replicas (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decent",
        description="Edge-offloading scheduler experiments (training, comparison, sweeps)",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_train = sub.add_parser("train", help="train replicas and write the learning curve")
    _add_common(p_train)

    p_cmp = sub.add_parser("compare", help="evaluate policies on shared streams")
    _add_common(p_cmp)

    p_sweep = sub.add_parser("sweep", help="sensitivity sweep over mu or alpha")
    _add_common(p_sweep)
    p_sweep.add_argument(
        "--axis", choices=["mu", "alpha"], help="sweep axis (overrides config sweep.axis)"
    )

    p_break = sub.add_parser("breakdown", help="per-priority-class delay averages")
    _add_common(p_break)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.verb == "train":
            path = run_training(cfg, args.out)
        elif args.verb == "compare":
            path = run_comparison(cfg, args.out)
        elif args.verb == "sweep":
            if args.axis:
                cfg.sweep = dataclasses.replace(cfg.sweep, axis=args.axis, values=cfg.sweep.values)
            path = run_sensitivity(cfg, args.out)
        else:
            path = run_weight_breakdown(cfg, args.out)
    except (ConfigError, SimulationError, ValueError, OSError) as exc:
        print(f"decent {args.verb}: error: {exc}", file=sys.stderr)
        return 1
    print(f"decent {args.verb}: wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
