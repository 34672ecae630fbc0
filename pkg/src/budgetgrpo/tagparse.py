"""Splitting completions into think/answer spans and checking numeric answers."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

THINK_OPEN = "<think>"
THINK_CLOSE = "</think>"
ANSWER_OPEN = "<answer>"
ANSWER_CLOSE = "</answer>"

Span = Tuple[int, int]

_TAGS = (THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE)
_NUMBER = re.compile(r"([+-]?)(\d+)(?:\.(\d+))?(?:/(\d+))?")


@dataclass(frozen=True)
class ParsedCompletion:
    raw_text: str
    think_span: Optional[Span] = None
    answer_span: Optional[Span] = None

    @property
    def has_think(self) -> bool:
        return self.think_span is not None

    @property
    def has_answer(self) -> bool:
        return self.answer_span is not None

    def think_text(self) -> Optional[str]:
        if self.think_span is None:
            return None
        return self.raw_text[self.think_span[0]:self.think_span[1]]

    def answer_text(self) -> Optional[str]:
        if self.answer_span is None:
            return None
        return self.raw_text[self.answer_span[0]:self.answer_span[1]]


def _scan_tags(text: str) -> list[tuple[int, str]]:
    events = []
    i = 0
    while i < len(text):
        if text[i] == "<":
            for tag in _TAGS:
                if text.startswith(tag, i):
                    events.append((i, tag))
                    i += len(tag)
                    break
            else:
                i += 1
        else:
            i += 1
    return events


def _single_pair(events, open_tag: str, close_tag: str) -> Optional[Span]:
    opens = [pos for pos, tag in events if tag == open_tag]
    closes = [pos for pos, tag in events if tag == close_tag]
    if len(opens) != 1 or len(closes) != 1:
        return None
    start = opens[0] + len(open_tag)
    if closes[0] < start:
        return None
    return (start, closes[0])


def parse_completion(text: str) -> ParsedCompletion:
    """Locate well-formed ``<think>`` and ``<answer>`` spans in ``text``.

    A span counts only when its open and close tag each occur exactly once and
    in order. Duplicated, nested, unclosed or reversed pairs leave the span
    unset. If both spans are found but overlap, or the answer comes first, the
    think span is dropped and the answer span is kept.
    """
    events = _scan_tags(text)
    think = _single_pair(events, THINK_OPEN, THINK_CLOSE)
    answer = _single_pair(events, ANSWER_OPEN, ANSWER_CLOSE)
    if think is not None and answer is not None:
        think_end = think[1] + len(THINK_CLOSE)
        answer_start = answer[0] - len(ANSWER_OPEN)
        if think_end > answer_start:
            think = None
    return ParsedCompletion(text, think, answer)


def extract_answer(pc: ParsedCompletion) -> Optional[str]:
    text = pc.answer_text()
    return None if text is None else text.strip()


def parse_number(text: str) -> Optional[Fraction]:
    """Parse an integer, decimal or ``p/q`` fraction as an exact rational.

    Surrounding whitespace, ``,`` thousands separators and a single leading
    ``+`` are tolerated. Returns None for anything else, including exponent
    notation and zero denominators.
    """
    s = text.strip().replace(",", "")
    m = _NUMBER.fullmatch(s)
    if m is None:
        return None
    sign, whole, frac_digits, denom = m.groups()
    if frac_digits is not None and denom is not None:
        return None
    value = Fraction(int(whole))
    if frac_digits is not None:
        value += Fraction(int(frac_digits), 10 ** len(frac_digits))
    if denom is not None:
        if int(denom) == 0:
            return None
        value = Fraction(int(whole), int(denom))
    return -value if sign == "-" else value


def verify_answer(candidate: str, gold: str) -> int:
    """Return 1 if ``candidate`` equals ``gold`` as an exact rational, else 0."""
    want = parse_number(gold)
    if want is None:
        raise ValueError(f"gold answer {gold!r} is not a number")
    got = parse_number(candidate)
    return int(got is not None and got == want)
