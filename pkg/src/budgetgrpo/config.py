"""Experiment configuration and its flat ``key = value`` file format.

A config file is a TOML subset: one ``key = value`` per line, dotted keys
for sections, ``#`` comments. Values are integers, floats, booleans or
double-quoted strings. Recognised keys::

    seed, total_steps, prompts_per_step, difficulty, operators,
    eval_every, eval_set_size, eval_greedy
    schedule.kind  (fixed | exponential | stepwise | linear)
    schedule.budget                              # fixed
    schedule.b0, schedule.gamma, schedule.interval   # exponential
    schedule.s0, schedule.sf, schedule.n         # stepwise
    schedule.s0, schedule.sf, schedule.n_drops   # linear
    grpo.<GrpoConfig field>
    rewards.<RewardConfig field>
    warmstart.<WarmStartConfig field>

Stepwise and linear schedules take their length from ``total_steps``.
Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

import tomli

from . import schedule as sched
from .base import WarmStartConfig
from .env import Difficulty
from .grpo import GrpoConfig
from .policy import OPERATORS
from .rewards import RewardConfig

_SCHEDULE_FIELDS = {
    "fixed": ("budget",),
    "exponential": ("b0", "gamma", "interval"),
    "stepwise": ("s0", "sf", "n"),
    "linear": ("s0", "sf", "n_drops"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    total_steps: int = 600
    prompts_per_step: int = 16
    difficulty: Difficulty = Difficulty.EASY
    operators: str = "+-*"
    schedule: sched.BudgetSchedule = sched.StepwiseExponential(24, 8, 3, 600)
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    rewards: RewardConfig = field(default_factory=RewardConfig)
    warmstart: WarmStartConfig = field(default_factory=WarmStartConfig)
    eval_every: int = 100
    eval_set_size: int = 400
    eval_greedy: bool = False

    def __post_init__(self):
        object.__setattr__(self, "difficulty", Difficulty(self.difficulty))
        for name in ("total_steps", "prompts_per_step", "eval_every", "eval_set_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if not self.operators or any(op not in OPERATORS for op in self.operators):
            raise ValueError(f"operators must be a non-empty subset of {''.join(OPERATORS)!r}")
        total = getattr(self.schedule, "total_steps", self.total_steps)
        if total != self.total_steps:
            raise ValueError("schedule.total_steps must equal total_steps")

    @property
    def final_budget(self) -> int:
        return self.schedule(self.total_steps - 1)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def with_schedule(self, schedule: sched.BudgetSchedule) -> "ExperimentConfig":
        return dataclasses.replace(self, schedule=schedule)


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if hasattr(value, "value"):
        value = value.value
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_flat(cfg: ExperimentConfig) -> dict[str, Any]:
    flat: dict[str, Any] = {
        "seed": cfg.seed,
        "total_steps": cfg.total_steps,
        "prompts_per_step": cfg.prompts_per_step,
        "difficulty": cfg.difficulty.value,
        "operators": cfg.operators,
        "eval_every": cfg.eval_every,
        "eval_set_size": cfg.eval_set_size,
        "eval_greedy": cfg.eval_greedy,
        "schedule.kind": cfg.schedule.kind,
    }
    for name in _SCHEDULE_FIELDS[cfg.schedule.kind]:
        flat[f"schedule.{name}"] = getattr(cfg.schedule, name)
    for section in ("grpo", "rewards", "warmstart"):
        obj = getattr(cfg, section)
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            flat[f"{section}.{f.name}"] = getattr(value, "value", value)
    return flat


def dumps(cfg: ExperimentConfig) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in to_flat(cfg).items())


def save(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as f:
        f.write(dumps(cfg))


def _flatten(table: dict, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in table.items():
        key = prefix + k
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _section(cls, flat: dict[str, Any], prefix: str):
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key in [k for k in flat if k.startswith(prefix + ".")]:
        name = key[len(prefix) + 1:]
        if name not in names:
            raise ValueError(f"unknown config key {key!r}")
        kwargs[name] = flat.pop(key)
    return cls(**kwargs)


def from_flat(flat: dict[str, Any]) -> ExperimentConfig:
    flat = dict(flat)
    top = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"schedule", "grpo", "rewards", "warmstart"}
    kwargs = {k: flat.pop(k) for k in list(flat) if k in top}
    total = kwargs.get("total_steps", ExperimentConfig.total_steps)

    kind = flat.pop("schedule.kind", None)
    if kind is not None:
        if kind not in _SCHEDULE_FIELDS:
            raise ValueError(f"unknown schedule.kind {kind!r}")
        params = {}
        for name in _SCHEDULE_FIELDS[kind]:
            key = f"schedule.{name}"
            if key not in flat:
                raise ValueError(f"missing config key {key!r}")
            params[name] = flat.pop(key)
        if kind in ("stepwise", "linear"):
            params["total_steps"] = total
        kwargs["schedule"] = sched.SCHEDULE_KINDS[kind](**params)
    elif "total_steps" in kwargs:
        kwargs["schedule"] = sched.StepwiseExponential(24, 8, 3, total)

    kwargs["grpo"] = _section(GrpoConfig, flat, "grpo")
    kwargs["rewards"] = _section(RewardConfig, flat, "rewards")
    kwargs["warmstart"] = _section(WarmStartConfig, flat, "warmstart")
    if flat:
        raise ValueError(f"unknown config key(s): {', '.join(sorted(flat))}")
    return ExperimentConfig(**kwargs)


def loads(text: str) -> ExperimentConfig:
    return from_flat(_flatten(tomli.loads(text)))


def load(path) -> ExperimentConfig:
    with open(path) as f:
        return loads(f.read())
