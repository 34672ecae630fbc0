"""Group-relative advantages, the clipped surrogate with a KL penalty, and the update."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import env
from .policy import (
    Policy,
    TokenStates,
    Trajectory,
    grad_kl_reference,
    kl_reference,
    trajectory_states,
)
from .optim import OPTIMIZERS, GradientAscent, make_optimizer
from .rewards import RewardConfig, total_reward
from .tagparse import parse_completion

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GrpoConfig:
    group_size: int = 8
    clip_eps: float = 0.2
    kl_beta: float = 0.02
    eps_stab: float = 1e-8
    learning_rate: float = 5e-3
    old_policy_refresh: int = 1
    optimizer: str = "sgd"

    def __post_init__(self):
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be > 0")
        if self.kl_beta < 0:
            raise ValueError("kl_beta must be >= 0")
        if self.eps_stab < 0:
            raise ValueError("eps_stab must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.old_policy_refresh < 1:
            raise ValueError("old_policy_refresh must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {sorted(OPTIMIZERS)}")


def group_advantages(rewards: Sequence[float], eps_stab: float = 1e-8) -> np.ndarray:
    """Standardise rewards within one group.

    Uses the population variance with ``eps_stab`` added under the square
    root. A group with zero spread and ``eps_stab == 0`` gets all-zero
    advantages rather than NaN.
    """
    r = np.asarray(rewards, dtype=float)
    if r.size < 2:
        raise ValueError("a group needs at least two rewards")
    centered = r - r.mean()
    denom = np.sqrt(np.mean(centered**2) + eps_stab)
    if denom == 0.0:
        return np.zeros_like(r)
    return centered / denom


def clipped_terms(ratios: np.ndarray, advantages: np.ndarray, clip_eps: float) -> np.ndarray:
    ratios = np.asarray(ratios, dtype=float)
    advantages = np.asarray(advantages, dtype=float)
    return np.minimum(ratios * advantages, np.clip(ratios, 1 - clip_eps, 1 + clip_eps) * advantages)


def clipped_surrogate(ratios: Sequence[float], advantages: Sequence[float], clip_eps: float) -> float:
    """Mean over the group of ``min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)``."""
    return float(np.mean(clipped_terms(np.asarray(ratios), np.asarray(advantages), clip_eps)))


@dataclass
class GroupRollout:
    task: env.ArithmeticTask
    trajectories: list[Trajectory]
    rewards: np.ndarray
    advantages: np.ndarray
    correct: np.ndarray
    budget_at_sampling: int


@dataclass
class RolloutBatch:
    """All groups of one step, flattened for the objective."""

    groups: list[GroupRollout]
    states: TokenStates
    logprob_old: np.ndarray
    advantages: np.ndarray

    @classmethod
    def from_groups(cls, spec, groups: list[GroupRollout]) -> "RolloutBatch":
        trajs = [tr for g in groups for tr in g.trajectories]
        return cls(
            groups,
            trajectory_states(spec, trajs),
            np.array([tr.logprob_old for tr in trajs]),
            np.concatenate([g.advantages for g in groups]),
        )


def score_group(
    task: env.ArithmeticTask,
    trajectories: list[Trajectory],
    budget: int,
    reward_cfg: RewardConfig,
    eps_stab: float,
) -> GroupRollout:
    rewards = np.empty(len(trajectories))
    correct = np.empty(len(trajectories), dtype=int)
    for i, tr in enumerate(trajectories):
        text = tr.text
        pc = parse_completion(text)
        c = env.evaluate_text(text, task)
        rewards[i] = total_reward(c, tr.length, budget, pc, reward_cfg).total
        correct[i] = c
    return GroupRollout(task, trajectories, rewards, group_advantages(rewards, eps_stab), correct, budget)


def collect_rollouts(
    old_policy: Policy,
    tasks: Sequence[env.ArithmeticTask],
    budget: int,
    cfg: GrpoConfig,
    reward_cfg: RewardConfig,
    rng: np.random.Generator,
) -> list[GroupRollout]:
    """Sample ``group_size`` completions per task under ``old_policy`` with a ``2 * budget`` cap."""
    G = cfg.group_size
    contexts = [task.context(budget, 2 * budget) for task in tasks for _ in range(G)]
    trajs = old_policy.sample_batch(contexts, rng)
    return [
        score_group(task, trajs[k * G:(k + 1) * G], budget, reward_cfg, cfg.eps_stab)
        for k, task in enumerate(tasks)
    ]


def objective(policy: Policy, ref: Policy, batch: RolloutBatch, cfg: GrpoConfig) -> float:
    """Batch estimate of the clipped surrogate minus ``kl_beta`` times the reference KL."""
    ratios = np.exp(policy.sequence_logprobs(batch.states) - batch.logprob_old)
    value = float(np.mean(clipped_terms(ratios, batch.advantages, cfg.clip_eps)))
    if cfg.kl_beta:
        value -= cfg.kl_beta * kl_reference(policy, ref, batch.states)
    return value


def objective_grad(policy: Policy, ref: Policy, batch: RolloutBatch, cfg: GrpoConfig) -> np.ndarray:
    ratios = np.exp(policy.sequence_logprobs(batch.states) - batch.logprob_old)
    A = batch.advantages
    lo, hi = 1 - cfg.clip_eps, 1 + cfg.clip_eps
    # the unclipped branch is the active one unless clipping makes the term smaller
    unclipped = ratios * A <= np.clip(ratios, lo, hi) * A
    weights = np.where(unclipped, A * ratios, 0.0) / len(A)
    grad = policy.sequence_grads(batch.states, weights)
    if cfg.kl_beta:
        grad -= cfg.kl_beta * grad_kl_reference(policy, ref, batch.states)
    return grad


@dataclass
class StepStats:
    budget: int
    mean_reward: float
    accuracy: float
    mean_length: float
    kl: float
    objective: float
    degenerate_groups: int


def grpo_step(
    policy: Policy,
    old_policy: Policy,
    ref: Policy,
    tasks: Sequence[env.ArithmeticTask],
    cfg: GrpoConfig,
    reward_cfg: RewardConfig,
    budget: int,
    rng: np.random.Generator,
    optimizer=None,
) -> tuple[Policy, StepStats, RolloutBatch]:
    """Sample groups under ``old_policy``, score them, and take one ascent step on ``policy``.

    ``optimizer`` defaults to plain gradient ascent with ``cfg.learning_rate``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    groups = collect_rollouts(old_policy, tasks, budget, cfg, reward_cfg, rng)
    batch = RolloutBatch.from_groups(policy.spec, groups)
    degenerate = sum(not np.any(g.advantages) for g in groups)
    if degenerate:
        log.debug("%d of %d groups have zero advantages", degenerate, len(groups))
    kl = kl_reference(policy, ref, batch.states)
    obj = objective(policy, ref, batch, cfg)
    grad = objective_grad(policy, ref, batch, cfg)
    if optimizer is None:
        optimizer = GradientAscent(cfg.learning_rate)
    new = policy.with_theta(optimizer.update(policy.theta, grad))
    stats = StepStats(
        budget=budget,
        mean_reward=float(np.mean([g.rewards.mean() for g in groups])),
        accuracy=float(np.mean([g.correct.mean() for g in groups])),
        mean_length=float(np.mean([tr.length for g in groups for tr in g.trajectories])),
        kl=kl,
        objective=obj,
        degenerate_groups=degenerate,
    )
    return new, stats, batch


class GrpoTrainer:
    """Holds the live policy plus the frozen reference and the sampling snapshot."""

    def __init__(self, policy: Policy, cfg: GrpoConfig, reward_cfg: RewardConfig):
        self.policy = policy
        self.ref = policy.copy()
        self.old = policy.copy()
        self.cfg = cfg
        self.reward_cfg = reward_cfg
        self.optimizer = make_optimizer(cfg.optimizer, cfg.learning_rate)
        self.steps_done = 0

    def step(self, tasks: Sequence[env.ArithmeticTask], budget: int, rng: np.random.Generator) -> StepStats:
        if self.steps_done % self.cfg.old_policy_refresh == 0:
            self.old = self.policy.copy()
        self.policy, stats, _ = grpo_step(
            self.policy, self.old, self.ref, tasks, self.cfg, self.reward_cfg, budget, rng, self.optimizer
        )
        self.steps_done += 1
        return stats
