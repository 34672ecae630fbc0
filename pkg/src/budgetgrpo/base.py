"""Warm-start "base model" for the toy policy.

RL from a uniform policy almost never samples a correct answer, so training
starts from a base policy fitted by maximum likelihood on synthetic
demonstrations: a filler think span of random length followed by an answer
that is right only some of the time. The result is verbose and mediocre,
which is the situation a length curriculum is meant to improve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import env
from .optim import Adam
from .policy import EOS_ID, TOKEN_ID, Context, FeatureSpec, Policy, encode, featurize

_FILLER = [TOKEN_ID[c] for c in "0123456789+-*= "]


@dataclass(frozen=True)
class WarmStartConfig:
    steps: int = 300
    batch_size: int = 64
    learning_rate: float = 0.05
    answer_accuracy: float = 0.3
    think_min: int = 14
    think_max: int = 26
    budget_min: int = 8
    budget_max: int = 24

    def __post_init__(self):
        if self.steps < 0 or self.batch_size < 1:
            raise ValueError("steps must be >= 0 and batch_size >= 1")
        if not 0.0 <= self.answer_accuracy <= 1.0:
            raise ValueError("answer_accuracy must lie in [0, 1]")
        if not 0 <= self.think_min <= self.think_max:
            raise ValueError("need 0 <= think_min <= think_max")
        if not 1 <= self.budget_min <= self.budget_max:
            raise ValueError("need 1 <= budget_min <= budget_max")


def demonstration(task: env.ArithmeticTask, rng: np.random.Generator, cfg: WarmStartConfig) -> list[int]:
    n_think = int(rng.integers(cfg.think_min, cfg.think_max + 1))
    filler = [_FILLER[i] for i in rng.integers(len(_FILLER), size=n_think)]
    if rng.random() < cfg.answer_accuracy:
        answer = task.gold_answer
    else:
        answer = task.gold_answer + int(rng.choice([-1, 1])) * int(rng.integers(1, 10))
    return (
        encode("<think>") + filler + encode("</think> <answer>")
        + encode(str(answer)) + encode("</answer>") + [EOS_ID]
    )


def warm_start(
    spec: FeatureSpec,
    cfg: WarmStartConfig,
    rng: np.random.Generator,
    difficulty: env.Difficulty | str = env.Difficulty.EASY,
    operators=env.OPERATORS,
) -> Policy:
    """Fit a policy to demonstrations with Adam on the mean log-likelihood."""
    policy = Policy(spec)
    opt = Adam(cfg.learning_rate)
    for _ in range(cfg.steps):
        tasks = env.gen_tasks(rng, cfg.batch_size, difficulty, operators)
        budgets = rng.integers(cfg.budget_min, cfg.budget_max + 1, size=len(tasks))
        demos = [demonstration(t, rng, cfg) for t in tasks]
        contexts = [
            Context(t.operand_a, t.operator, t.operand_b, int(L), max(len(d), 2 * int(L)))
            for t, L, d in zip(tasks, budgets, demos)
        ]
        states = featurize(spec, contexts, demos)
        grad = policy.sequence_grads(states, np.full(len(demos), 1.0 / len(demos)))
        policy = policy.with_theta(opt.update(policy.theta, grad))
    return policy
