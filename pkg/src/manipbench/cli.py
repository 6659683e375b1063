"""Command-line interface.

Subcommands mirror the pipeline: ``gen`` precomputes labeled datasets,
``train`` fits the network grid, ``eval`` scores trained policies, ``baseline``
scores the ideal manipulator, and ``report`` aggregates result CSVs into
summaries and figures. Grid flags accept comma-separated lists; ``--hidden``
may be repeated with layer widths like ``128x128``. A YAML config supplies
defaults that the flags override; MANIPBENCH_OUT sets the default output root.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import ExperimentConfig, parse_hidden
from .harness import baseline, evaluate_policies, gen_data, train_grid
from .information import InfoType
from .neural import TrainConfig
from .oracle import Labeling
from .report import report
from .samplers import ProbModel
from .voting_methods import MethodId


def _csv_list(text: str) -> list[str]:
    return [p for p in (s.strip() for s in text.split(",")) if p]


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML config file with defaults")
    p.add_argument("--method", help="comma list of voting methods (names or codes)")
    p.add_argument("--model", help="comma list of probability models (uniform, spatial2d, mallows[:phi])")
    p.add_argument("--voters", help="comma list of voter counts")
    p.add_argument("--candidates", help="comma list of candidate counts (<= 6)")
    p.add_argument("--info", help="comma list of information types")
    p.add_argument("--labeling", help="optimizing or satisficing")
    p.add_argument("--hidden", action="append",
                   help="hidden layer widths like 128x128; repeat for a grid")
    p.add_argument("--train-size", type=int, help="instances per dataset cell")
    p.add_argument("--batch-size", type=int, help="training batch size")
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--loss", choices=["masked_mse", "masked_bce"])
    p.add_argument("--seed", help="comma list of generation seeds")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", type=Path, help="output root directory")


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    updates: dict = {}
    if args.method:
        updates["methods"] = tuple(MethodId.parse(s) for s in _csv_list(args.method))
    if args.model:
        updates["models"] = tuple(ProbModel.parse(s) for s in _csv_list(args.model))
    if args.voters:
        updates["voters"] = tuple(int(s) for s in _csv_list(args.voters))
    if args.candidates:
        updates["candidates"] = tuple(int(s) for s in _csv_list(args.candidates))
    if args.info:
        updates["infos"] = tuple(InfoType.parse(s) for s in _csv_list(args.info))
    if args.labeling:
        updates["labeling"] = Labeling.parse(args.labeling)
    if args.hidden:
        updates["net_grid"] = tuple(parse_hidden(h) for h in args.hidden)
    if args.train_size:
        updates["train_size"] = args.train_size
    train_updates = {}
    if args.batch_size:
        train_updates["batch_size"] = args.batch_size
    if args.learning_rate:
        train_updates["learning_rate"] = args.learning_rate
    if args.loss:
        train_updates["loss"] = args.loss
    if train_updates:
        base = cfg.train
        updates["train"] = TrainConfig(
            **{
                **{f: getattr(base, f) for f in base.__dataclass_fields__},
                **train_updates,
            }
        )
    if args.seed:
        updates["seeds"] = tuple(int(s) for s in _csv_list(args.seed))
    if args.workers:
        updates["workers"] = args.workers
    if args.out:
        updates["out"] = args.out
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="manipbench",
        description="strategic-manipulation workbench for preferential voting methods",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="precompute labeled training datasets")
    _add_grid_flags(p_gen)

    p_train = sub.add_parser("train", help="train the network grid on generated datasets")
    _add_grid_flags(p_train)

    p_eval = sub.add_parser("eval", help="evaluate trained networks (or the sincere stub)")
    _add_grid_flags(p_eval)
    p_eval.add_argument("--policy", choices=["net", "sincere"], default="net")

    p_base = sub.add_parser("baseline", help="ideal-manipulator baselines")
    _add_grid_flags(p_base)

    p_rep = sub.add_parser("report", help="aggregate results into summary CSVs and figures")
    p_rep.add_argument("results_dir", nargs="?", type=Path, default=None,
                       help="directory containing results_*.csv (default <out>/results)")
    p_rep.add_argument("--out", type=Path, help="output root (used when results_dir omitted)")

    args = parser.parse_args(argv)

    if args.command == "report":
        out_root = args.out if args.out else ExperimentConfig().out
        results_dir = args.results_dir if args.results_dir else Path(out_root) / "results"
        summary = report(results_dir)
        print(f"wrote {summary}")
        return 0

    cfg = build_config(args)
    if args.command == "gen":
        written = gen_data(cfg)
        print(f"wrote {len(written)} dataset file(s) under {cfg.out / 'data'}")
    elif args.command == "train":
        ckpts = train_grid(cfg)
        print(f"{len(ckpts)} checkpoint(s) under {cfg.out / 'checkpoints'}")
    elif args.command == "eval":
        path = evaluate_policies(cfg, args.policy)
        print(f"wrote {path}")
    elif args.command == "baseline":
        path = baseline(cfg)
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
