"""Token-budget curricula: map a training step to the target completion length."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def budget_exponential(t: int, b0: int, gamma: float, interval: int) -> int:
    """``max(1, round(b0 * gamma ** (t // interval)))``."""
    return max(1, _round_half_up(b0 * gamma ** (t // interval)))


def stepwise_decay_factor(s0: int, sf: int, n: int) -> float:
    """Per-drop multiplier that takes ``s0`` to ``sf`` in ``n`` equal ratios."""
    return (sf / s0) ** (1.0 / n)


def _drop_index(t: int, n: int, total_steps: int) -> int:
    # floor(t / I) with I = total_steps / (n + 1), kept in integers so that
    # fractional intervals do not pick up float error at the boundaries
    return min(n, (t * (n + 1)) // total_steps)


def budget_stepwise(t: int, s0: int, sf: int, n: int, total_steps: int) -> int:
    """Geometric drops every ``total_steps / (n + 1)`` steps, ending exactly at ``sf``."""
    k = _drop_index(t, n, total_steps)
    if k == n:
        return sf
    return max(1, _round_half_up(s0 * stepwise_decay_factor(s0, sf, n) ** k))


def budget_linear(t: int, s0: int, sf: int, n_drops: int, total_steps: int) -> int:
    """Equal-size drops from ``s0`` to ``sf`` on the same grid as the stepwise schedule."""
    k = _drop_index(t, n_drops, total_steps)
    if k == n_drops:
        return sf
    return max(1, _round_half_up(s0 - k * (s0 - sf) / n_drops))


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class Fixed:
    budget: int

    kind = "fixed"

    def __post_init__(self):
        _require(self.budget >= 1, "budget must be >= 1")

    def __call__(self, t: int) -> int:
        return self.budget

    @property
    def final_budget(self) -> int:
        return self.budget


@dataclass(frozen=True)
class Exponential:
    b0: int
    gamma: float
    interval: int

    kind = "exponential"

    def __post_init__(self):
        _require(self.b0 >= 1, "b0 must be >= 1")
        _require(0.0 < self.gamma < 1.0, "gamma must lie in (0, 1)")
        _require(self.interval >= 1, "interval must be >= 1")

    def __call__(self, t: int) -> int:
        return budget_exponential(t, self.b0, self.gamma, self.interval)


@dataclass(frozen=True)
class StepwiseExponential:
    s0: int
    sf: int
    n: int
    total_steps: int

    kind = "stepwise"

    def __post_init__(self):
        _require(1 <= self.sf <= self.s0, "need 1 <= sf <= s0")
        _require(self.n >= 1, "n must be >= 1")
        _require(self.total_steps >= 1, "total_steps must be >= 1")

    @property
    def decay(self) -> float:
        return stepwise_decay_factor(self.s0, self.sf, self.n)

    @property
    def final_budget(self) -> int:
        return self.sf

    def __call__(self, t: int) -> int:
        return budget_stepwise(t, self.s0, self.sf, self.n, self.total_steps)


@dataclass(frozen=True)
class Linear:
    s0: int
    sf: int
    n_drops: int = 3
    total_steps: int = 600

    kind = "linear"

    def __post_init__(self):
        _require(1 <= self.sf <= self.s0, "need 1 <= sf <= s0")
        _require(self.n_drops >= 1, "n_drops must be >= 1")
        _require(self.total_steps >= 1, "total_steps must be >= 1")

    @property
    def final_budget(self) -> int:
        return self.sf

    def __call__(self, t: int) -> int:
        return budget_linear(t, self.s0, self.sf, self.n_drops, self.total_steps)


BudgetSchedule = Union[Fixed, Exponential, StepwiseExponential, Linear]

SCHEDULE_KINDS = {cls.kind: cls for cls in (Fixed, Exponential, StepwiseExponential, Linear)}


def trace(schedule: BudgetSchedule, total_steps: int) -> list[int]:
    return [schedule(t) for t in range(total_steps)]
