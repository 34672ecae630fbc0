import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from budgetgrpo.tagparse import extract_answer, parse_completion, parse_number, verify_answer

TAGS = ["<think>", "</think>", "<answer>", "</answer>"]


def count_tags(text):
    """Character scan, no regex: positions of every tag occurrence."""
    found = {t: [] for t in TAGS}
    i = 0
    while i < len(text):
        for tag in sorted(TAGS, key=len, reverse=True):
            if text[i:i + len(tag)] == tag:
                found[tag].append(i)
                i += len(tag) - 1
                break
        i += 1
    return found


def oracle_indicators(text):
    found = count_tags(text)

    def pair(o, c):
        return len(found[o]) == 1 and len(found[c]) == 1 and found[o][0] < found[c][0]

    has_think = pair("<think>", "</think>")
    has_answer = pair("<answer>", "</answer>")
    if has_think and has_answer:
        think_end = found["</think>"][0] + len("</think>")
        if think_end > found["<answer>"][0]:
            has_think = False
    return has_think, has_answer


@pytest.mark.parametrize(
    "text, think, answer",
    [
        ("<think>2+2=4</think> <answer>4</answer>", True, True),
        ("", False, False),
        ("<think>a<think>b</think></think><answer>4</answer>", False, True),
        ("<think>x</think>", True, False),
        ("<think>x<answer>4</answer>", False, True),
        ("<answer>1</answer><answer>2</answer>", False, False),
        ("</think>x<think>", False, False),
        ("junk <think>x</think> more <answer>5</answer> tail", True, True),
        ("<THINK>x</THINK>", False, False),
        ("<answer>4</answer><think>x</think>", False, True),
    ],
)
def test_parse_examples(text, think, answer):
    pc = parse_completion(text)
    assert (pc.has_think, pc.has_answer) == (think, answer)
    assert (pc.has_think, pc.has_answer) == oracle_indicators(text)


def test_spans_point_at_contents():
    pc = parse_completion("<think>abc</think> <answer> 42 </answer>")
    assert pc.think_text() == "abc"
    assert pc.answer_text() == " 42 "
    assert pc.think_span[1] <= pc.answer_span[0]


pieces = st.sampled_from(TAGS + ["a", "1", " ", "<", ">", "/", "think", "answer"])


@settings(max_examples=500)
@given(st.lists(pieces, max_size=12))
def test_parse_agrees_with_scan_oracle(parts):
    text = "".join(parts)
    pc = parse_completion(text)
    assert (pc.has_think, pc.has_answer) == oracle_indicators(text)
    assert pc.has_think == (pc.think_span is not None)
    if pc.has_think and pc.has_answer:
        assert pc.think_span[1] < pc.answer_span[0]


@given(st.text(alphabet="ab1 +-", max_size=10), st.text(alphabet="0123456789 ", max_size=6))
def test_reparse_of_span_contents_finds_nothing_new(think, answer):
    pc = parse_completion(f"<think>{think}</think><answer>{answer}</answer>")
    inner = parse_completion(pc.think_text())
    assert not inner.has_think and not inner.has_answer


@pytest.mark.parametrize(
    "text, expected",
    [("<answer> 42 </answer>", "42"), ("no tags here", None), ("<answer>3/4</answer>", "3/4")],
)
def test_extract_answer(text, expected):
    assert extract_answer(parse_completion(text)) == expected


@pytest.mark.parametrize(
    "cand, gold, c",
    [
        ("42", "42", 1),
        ("3.50", "3.5", 1),
        ("1/2", "0.5", 1),
        ("forty-two", "42", 0),
        (" +1,000 ", "1000", 1),
        ("012", "12", 1),
        ("-6", "-6", 1),
        ("6", "-6", 0),
        ("1e3", "1000", 0),
        ("1/0", "1", 0),
        ("++1", "1", 0),
        ("", "0", 0),
    ],
)
def test_verify_answer(cand, gold, c):
    assert verify_answer(cand, gold) == c


def test_rational_oracle_for_decimal_examples():
    assert Fraction(350, 100) == Fraction(35, 10)
    assert Fraction(1, 2) == Fraction(5, 10)


@pytest.mark.parametrize("gold", ["abc", "1/0", "", "1e5"])
def test_invalid_gold_is_an_error(gold):
    with pytest.raises(ValueError):
        verify_answer("1", gold)


def render(value_num, value_den, style, rng):
    """Write p/q in one of several accepted surface forms (q divides a power of 10 for decimals)."""
    sign = "-" if value_num < 0 else rng.choice(["", "+"])
    p = abs(value_num)
    if style == "fraction":
        k = rng.randint(1, 5)
        return f"{sign}{p * k}/{value_den * k}"
    if style == "decimal":
        # value_den is 2^a 5^b <= 100 here, so scale to a 2-digit (or more) decimal
        scale = 100 * 10 ** rng.randint(0, 2)
        digits = p * scale // value_den
        whole, frac = divmod(digits, scale)
        return f"{sign}{whole}.{str(frac).zfill(len(str(scale)) - 1)}"
    assert value_den == 1
    s = f"{p:,}" if rng.random() < 0.5 else str(p)
    return f"{' ' * rng.randint(0, 2)}{sign}{'0' * rng.randint(0, 2)}{s}{' ' * rng.randint(0, 2)}"


def test_verify_matches_rational_oracle_on_10k_pairs():
    rng = random.Random(1234)
    decimal_dens = [1, 2, 4, 5, 10, 20, 25, 50, 100]
    for _ in range(10_000):
        style = rng.choice(["int", "decimal", "fraction"])
        den = 1 if style == "int" else rng.choice(decimal_dens if style == "decimal" else [1, 3, 7, 12])
        num = rng.randint(-5000, 5000)
        other_num = num + rng.choice([0, 0, 1, -1, den])
        gold = f"{other_num}/{den}" if den != 1 else str(other_num)
        cand = render(num, den, style, rng)
        expected = int(Fraction(num, den) == Fraction(other_num, den))
        assert verify_answer(cand, gold) == expected, (cand, gold)


@given(st.integers(-10**6, 10**6), st.integers(1, 1000), st.integers(-10**6, 10**6), st.integers(1, 1000))
def test_verify_symmetric(p1, q1, p2, q2):
    a, b = f"{p1}/{q1}", f"{p2}/{q2}"
    assert verify_answer(a, b) == verify_answer(b, a)


def test_parse_number_forms():
    assert parse_number("12.25") == Fraction(49, 4)
    assert parse_number("-3/6") == Fraction(-1, 2)
    assert parse_number("1.5/2") is None
    assert parse_number("") is None
