"""Command-line entry point: ``budgetgrpo {train,eval,compare,schedule}``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import config as config_io
from . import env, harness
from .config import ExperimentConfig
from .policy import load_checkpoint
from .schedule import trace


def _load_config(path):
    return config_io.load(path) if path else ExperimentConfig()


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    result = harness.run_training(cfg, args.out)
    acc, length = result.final_eval
    print(f"final eval accuracy {acc:.4f} mean length {length:.2f} (budget {cfg.final_budget})")
    return 0


def cmd_eval(args) -> int:
    policy, step = load_checkpoint(args.checkpoint)
    difficulty = env.Difficulty(args.difficulty)
    rng = np.random.default_rng(args.seed)
    tasks = env.gen_tasks(rng, args.n, difficulty, args.operators)
    acc, length = harness.run_eval(policy, tasks, args.budget, rng, args.greedy)
    print(f"checkpoint step {step}: accuracy {acc:.4f} mean length {length:.2f} over {args.n} tasks at budget {args.budget}")
    return 0


def cmd_compare(args) -> int:
    cfg = _load_config(args.config)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    report = harness.compare_curriculum_vs_fixed(cfg, seeds, args.out)
    print(report.format())
    return 0


def cmd_schedule(args) -> int:
    cfg = _load_config(args.config)
    budgets = trace(cfg.schedule, cfg.total_steps)
    if args.print:
        for t, b in enumerate(budgets):
            print(f"{t}\t{b}")
    else:
        changes = [(t, b) for t, b in enumerate(budgets) if t == 0 or b != budgets[t - 1]]
        for t, b in changes:
            print(f"step {t}: budget {b}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="budgetgrpo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one seeded training job")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on fresh tasks")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--difficulty", default="easy", choices=[d.value for d in env.Difficulty])
    p.add_argument("--operators", default="+-*")
    p.add_argument("--greedy", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="curriculum vs fixed final budget over several seeds")
    p.add_argument("--config")
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("schedule", help="show the budget trace of a config")
    p.add_argument("--config")
    p.add_argument("--print", action="store_true", help="dump the budget at every step")
    p.set_defaults(func=cmd_schedule)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
