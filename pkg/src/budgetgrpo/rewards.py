"""Correctness, length and formatting rewards and their weighted total."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .tagparse import ParsedCompletion


class LengthShape(str, Enum):
    TRIANGULAR = "triangular"
    BAND = "band"


@dataclass(frozen=True)
class RewardConfig:
    lambda_c: float = 0.6
    lambda_l: float = 0.3
    lambda_f: float = 0.1
    r_cor: float = 1.0
    r_max: float = 1.0
    alpha_think: float = 0.5
    alpha_answer: float = 0.5
    length_shape: LengthShape = LengthShape.TRIANGULAR

    def __post_init__(self):
        object.__setattr__(self, "length_shape", LengthShape(self.length_shape))
        for name in ("lambda_c", "lambda_l", "lambda_f"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("r_cor", "r_max", "alpha_think", "alpha_answer"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class RewardBreakdown:
    """Unweighted components plus the weighted total."""

    correct_component: float
    length_component: float
    format_component: float
    total: float


def _check_budget(budget: int) -> None:
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")


def _down_ramp(length: float, budget: int, r_max: float) -> float:
    if length > 2 * budget:
        return 0.0
    return r_max * (1.0 - (length - budget) / budget)


def length_reward_triangular(length: float, budget: int, r_max: float = 1.0) -> float:
    """Ramp from 0 up to ``r_max`` at ``budget``, back to 0 at twice the budget."""
    _check_budget(budget)
    if length <= budget:
        return r_max * (length / budget)
    return _down_ramp(length, budget, r_max)


def length_reward_band(length: float, budget: int, r_max: float = 1.0) -> float:
    """Flat ``r_max`` up to ``budget``, then the same linear decay as the triangle."""
    _check_budget(budget)
    if length <= budget:
        return r_max
    return _down_ramp(length, budget, r_max)


def length_reward(length: float, budget: int, cfg: RewardConfig) -> float:
    if cfg.length_shape is LengthShape.BAND:
        return length_reward_band(length, budget, cfg.r_max)
    return length_reward_triangular(length, budget, cfg.r_max)


def format_reward(pc: ParsedCompletion, cfg: RewardConfig) -> float:
    return cfg.alpha_think * pc.has_think + cfg.alpha_answer * pc.has_answer


def total_reward(
    correct: int, length: int, budget: int, pc: ParsedCompletion, cfg: RewardConfig
) -> RewardBreakdown:
    r_correct = cfg.r_cor * correct
    r_len = length_reward(length, budget, cfg)
    r_fmt = format_reward(pc, cfg)
    total = cfg.lambda_c * r_correct + cfg.lambda_l * r_len + cfg.lambda_f * r_fmt
    return RewardBreakdown(r_correct, r_len, r_fmt, total)
