"""Seeded training/evaluation runs and the curriculum-vs-fixed comparison."""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import config as config_io
from . import env
from .base import warm_start
from .config import ExperimentConfig
from .grpo import GrpoTrainer
from .policy import FeatureSpec, Policy, save_checkpoint
from .schedule import Fixed

log = logging.getLogger(__name__)

METRICS_FIELDS = (
    "step",
    "budget",
    "train_mean_reward",
    "train_accuracy",
    "train_mean_length",
    "kl",
    "objective",
    "eval_accuracy",
    "eval_mean_length",
)

# independent random streams derived from one experiment seed
_TRAIN, _EVAL_TASKS, _EVAL_SAMPLING, _WARMSTART, _BASELINE_EVAL = range(5)


@dataclass
class MetricsRecord:
    step: int
    budget: int
    train_mean_reward: float
    train_accuracy: float
    train_mean_length: float
    kl: float
    objective: float
    eval_accuracy: Optional[float] = None
    eval_mean_length: Optional[float] = None

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps({k: d[k] for k in METRICS_FIELDS})


@dataclass
class TrainingResult:
    config: ExperimentConfig
    metrics: list[MetricsRecord]
    policy: Policy
    base_policy: Policy
    final_eval: tuple[float, float] = field(default=(0.0, 0.0))


def feature_spec_for(cfg: ExperimentConfig) -> FeatureSpec:
    if cfg.difficulty is env.Difficulty.EASY:
        return FeatureSpec(operand_max=9)
    # a pair one-hot over 2-digit operands would need ~3M parameters
    return FeatureSpec(operand_max=99, pair_features=False)


def _rng(seed: int, stream: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream, *extra])


def eval_tasks(cfg: ExperimentConfig, seed: Optional[int] = None) -> list[env.ArithmeticTask]:
    seed = cfg.seed if seed is None else seed
    return env.gen_tasks(_rng(seed, _EVAL_TASKS), cfg.eval_set_size, cfg.difficulty, cfg.operators)


def base_policy(cfg: ExperimentConfig, seed: Optional[int] = None) -> Policy:
    """The untrained starting point for a seed: the warm-started base model."""
    seed = cfg.seed if seed is None else seed
    return warm_start(
        feature_spec_for(cfg), cfg.warmstart, _rng(seed, _WARMSTART), cfg.difficulty, cfg.operators
    )


def run_eval(
    policy: Policy,
    tasks: Sequence[env.ArithmeticTask],
    budget: int,
    rng: np.random.Generator,
    greedy: bool = False,
) -> tuple[float, float]:
    """Accuracy and mean completion length over ``tasks`` at a given budget.

    Completions are capped at ``2 * budget`` tokens, as in training.
    """
    if not tasks:
        raise ValueError("run_eval needs at least one task")
    trajs = policy.sample_batch([t.context(budget, 2 * budget) for t in tasks], rng, greedy)
    acc = float(np.mean([env.evaluate(tr.tokens, t) for tr, t in zip(trajs, tasks)]))
    return acc, float(np.mean([tr.length for tr in trajs]))


def run_training(
    cfg: ExperimentConfig,
    out_dir: Optional[str] = None,
    initial_policy: Optional[Policy] = None,
) -> TrainingResult:
    """Train one seeded run and optionally write its artifacts to ``out_dir``.

    Evaluation draws from its own random streams, so changing
    ``eval_every`` never changes the trained parameters.
    """
    policy = initial_policy if initial_policy is not None else base_policy(cfg)
    trainer = GrpoTrainer(policy, cfg.grpo, cfg.rewards)
    rng = _rng(cfg.seed, _TRAIN)
    held_out = eval_tasks(cfg)
    ops = cfg.operators

    metrics: list[MetricsRecord] = []
    final_eval = (0.0, 0.0)
    for t in range(cfg.total_steps):
        budget = cfg.schedule(t)
        tasks = env.gen_tasks(rng, cfg.prompts_per_step, cfg.difficulty, ops)
        stats = trainer.step(tasks, budget, rng)
        rec = MetricsRecord(
            step=t,
            budget=budget,
            train_mean_reward=stats.mean_reward,
            train_accuracy=stats.accuracy,
            train_mean_length=stats.mean_length,
            kl=stats.kl,
            objective=stats.objective,
        )
        last = t == cfg.total_steps - 1
        if last or (t + 1) % cfg.eval_every == 0:
            acc, length = run_eval(
                trainer.policy, held_out, budget, _rng(cfg.seed, _EVAL_SAMPLING, t), cfg.eval_greedy
            )
            rec.eval_accuracy, rec.eval_mean_length = acc, length
            if last:
                final_eval = (acc, length)
            log.info("step %d budget %d eval acc %.3f len %.2f", t, budget, acc, length)
        metrics.append(rec)

    result = TrainingResult(cfg, metrics, trainer.policy, policy, final_eval)
    if out_dir is not None:
        write_run(result, out_dir)
    return result


def write_run(result: TrainingResult, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "metrics.jsonl"), "w") as f:
        for rec in result.metrics:
            f.write(rec.to_json() + "\n")
    save_checkpoint(os.path.join(out_dir, "checkpoint.txt"), result.policy, len(result.metrics))
    config_io.save(result.config, os.path.join(out_dir, "config.toml"))
    with open(os.path.join(out_dir, "curves.tsv"), "w") as f:
        f.write("step\tbudget\ttrain_accuracy\ttrain_mean_length\teval_accuracy\teval_mean_length\n")
        for r in result.metrics:
            ev_acc = "nan" if r.eval_accuracy is None else repr(r.eval_accuracy)
            ev_len = "nan" if r.eval_mean_length is None else repr(r.eval_mean_length)
            f.write(f"{r.step}\t{r.budget}\t{r.train_accuracy!r}\t{r.train_mean_length!r}\t{ev_acc}\t{ev_len}\n")
    acc, length = result.final_eval
    write_summary(
        [SummaryRow(result.config.schedule.kind, result.config.seed, result.config.final_budget, acc, length)],
        os.path.join(out_dir, "summary.csv"),
    )


@dataclass(frozen=True)
class SummaryRow:
    arm: str
    seed: int
    budget: int
    accuracy: float
    mean_length: float


def write_summary(rows: Sequence[SummaryRow], path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["arm", "seed", "budget", "accuracy", "mean_length"])
        for r in rows:
            w.writerow([r.arm, r.seed, r.budget, repr(r.accuracy), repr(r.mean_length)])


ARMS = ("untrained", "curriculum", "fixed")


@dataclass
class ComparisonReport:
    rows: list[SummaryRow]
    final_budget: int
    # wall-clock seconds per (arm, seed); the untrained entry is the warm start
    # shared by both trained arms. Kept out of summary.csv.
    run_seconds: dict[tuple[str, int], float] = field(default_factory=dict)

    def arm_rows(self, arm: str) -> list[SummaryRow]:
        return [r for r in self.rows if r.arm == arm]

    def mean(self, arm: str) -> tuple[float, float]:
        rows = self.arm_rows(arm)
        return (
            float(np.mean([r.accuracy for r in rows])),
            float(np.mean([r.mean_length for r in rows])),
        )

    def format(self) -> str:
        lines = [
            f"final budget {self.final_budget}",
            f"{'arm':<11} {'seed':>5} {'acc %':>7} {'tokens':>7} {'secs':>7}",
        ]
        for r in self.rows:
            secs = self.run_seconds.get((r.arm, r.seed))
            secs_txt = "-" if secs is None else f"{secs:.1f}"
            lines.append(f"{r.arm:<11} {r.seed:>5} {100 * r.accuracy:7.2f} {r.mean_length:7.2f} {secs_txt:>7}")
        for arm in ARMS:
            acc, length = self.mean(arm)
            lines.append(f"{arm:<11} {'mean':>5} {100 * acc:7.2f} {length:7.2f}")
        return "\n".join(lines)


def compare_curriculum_vs_fixed(
    base_cfg: ExperimentConfig, seeds: Sequence[int], out_dir: Optional[str] = None
) -> ComparisonReport:
    """Run the configured curriculum and a constant final-budget baseline per seed.

    Both arms start from the same per-seed base policy and are scored on the
    same held-out tasks; the base policy itself is reported as the
    ``untrained`` arm.
    """
    if len(seeds) < 5:
        raise ValueError("compare needs at least 5 seeds")
    final = base_cfg.final_budget
    rows: list[SummaryRow] = []
    seconds: dict[tuple[str, int], float] = {}
    for seed in seeds:
        cur_cfg = base_cfg.replace(seed=seed)
        fixed_cfg = cur_cfg.with_schedule(Fixed(final))
        start = time.perf_counter()
        base = base_policy(cur_cfg)
        seconds["untrained", seed] = time.perf_counter() - start
        acc, length = run_eval(
            base, eval_tasks(cur_cfg), final, _rng(seed, _BASELINE_EVAL), cur_cfg.eval_greedy
        )
        rows.append(SummaryRow("untrained", seed, final, acc, length))
        for arm, cfg in (("curriculum", cur_cfg), ("fixed", fixed_cfg)):
            sub = None if out_dir is None else os.path.join(out_dir, f"{arm}_seed{seed}")
            start = time.perf_counter()
            res = run_training(cfg, sub, initial_policy=base)
            seconds[arm, seed] = time.perf_counter() - start
            rows.append(SummaryRow(arm, seed, final, *res.final_eval))
            log.info("%s seed %d: acc %.3f len %.2f", arm, seed, *res.final_eval)
    report = ComparisonReport(rows, final, seconds)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_summary(rows, os.path.join(out_dir, "summary.csv"))
    return report
