"""Synthetic arithmetic tasks, prompt rendering and answer checking."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .policy import OPERATORS, Context, decode
from .tagparse import extract_answer, parse_completion, parse_number, verify_answer

PROMPT_TEMPLATE = (
    "A conversation between User and Assistant. The user asks a question, and the "
    "Assistant solves it. The assistant first thinks about the reasoning process in "
    "the mind and then provides the user with the answer. The reasoning process and "
    "answer are enclosed within <think></think> and <answer></answer> tags, "
    "respectively, i.e., <think>reasoning process here</think> <answer>answer here"
    "</answer>. IMPORTANT: You should use exactly {token_budget} tokens in your "
    "response. User: {question} Assistant:"
)


class Difficulty(str, Enum):
    EASY = "easy"
    HARD = "hard"


OPERAND_RANGE = {Difficulty.EASY: (0, 9), Difficulty.HARD: (10, 99)}


def _apply(a: int, op: str, b: int) -> int:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    raise ValueError(f"unknown operator {op!r}")


@dataclass(frozen=True)
class ArithmeticTask:
    operand_a: int
    operator: str
    operand_b: int
    gold_answer: int

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}")
        if _apply(self.operand_a, self.operator, self.operand_b) != self.gold_answer:
            raise ValueError(f"gold answer {self.gold_answer} is wrong for {self.question}")

    @classmethod
    def make(cls, a: int, op: str, b: int) -> "ArithmeticTask":
        return cls(a, op, b, _apply(a, op, b))

    @property
    def question(self) -> str:
        return f"{self.operand_a} {self.operator} {self.operand_b} = ?"

    def context(self, budget: int, max_len: int = 0) -> Context:
        return Context(self.operand_a, self.operator, self.operand_b, budget, max_len)


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    budget: int


def gen_task(
    rng: np.random.Generator,
    difficulty: Difficulty | str = Difficulty.EASY,
    operators: Sequence[str] = OPERATORS,
) -> ArithmeticTask:
    lo, hi = OPERAND_RANGE[Difficulty(difficulty)]
    a, b = (int(x) for x in rng.integers(lo, hi + 1, size=2))
    op = operators[int(rng.integers(len(operators)))]
    return ArithmeticTask.make(a, op, b)


def gen_tasks(
    rng: np.random.Generator,
    n: int,
    difficulty: Difficulty | str = Difficulty.EASY,
    operators: Sequence[str] = OPERATORS,
) -> list[ArithmeticTask]:
    return [gen_task(rng, difficulty, operators) for _ in range(n)]


def render_prompt(task: ArithmeticTask, budget: int) -> RenderedPrompt:
    if budget < 1:
        raise ValueError("budget must be >= 1")
    text = PROMPT_TEMPLATE.format(token_budget=budget, question=task.question)
    return RenderedPrompt(text, budget)


def evaluate_text(text: str, task: ArithmeticTask) -> int:
    answer = extract_answer(parse_completion(text))
    if answer is None:
        return 0
    return verify_answer(answer, str(task.gold_answer))


def evaluate(tokens: Sequence[int], task: ArithmeticTask) -> int:
    """1 if the completion's answer span holds the task's result, else 0."""
    return evaluate_text(decode(tokens), task)


# -- task-set files: one ``a<TAB>op<TAB>b<TAB>gold`` record per line --------


def dump_tasks(tasks: Iterable[ArithmeticTask], path) -> None:
    with open(path, "w") as f:
        for t in tasks:
            f.write(f"{t.operand_a}\t{t.operator}\t{t.operand_b}\t{t.gold_answer}\n")


def load_tasks(path) -> list[ArithmeticTask]:
    tasks = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields")
            a, op, b, gold = fields
            value = parse_number(gold)
            if value is None or value.denominator != 1:
                raise ValueError(f"{path}:{lineno}: gold {gold!r} is not an integer")
            tasks.append(ArithmeticTask(int(a), op, int(b), int(value)))
    return tasks
