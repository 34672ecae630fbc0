from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from budgetgrpo.schedule import (
    Exponential,
    Fixed,
    Linear,
    StepwiseExponential,
    budget_exponential,
    budget_linear,
    budget_stepwise,
    stepwise_decay_factor,
    trace,
)


def test_exponential_examples():
    assert budget_exponential(0, 256, 0.7, 100) == 256
    assert budget_exponential(600, 256, 0.7, 100) == 30
    assert budget_exponential(10**6, 1, 0.5, 1) == 1
    assert budget_exponential(99, 256, 0.7, 100) == 256
    assert budget_exponential(100, 256, 0.7, 100) == 179


@pytest.mark.parametrize("n, d", [(1, 0.340), (7, 0.857)])
def test_decay_factor_matches_reported(n, d):
    assert stepwise_decay_factor(256, 87, n) == pytest.approx(d, abs=1e-3)


def test_decay_factor_n3_exact_value():
    # (87/256)^(1/3); the reported 0.700 is a rounding of 0.698
    assert stepwise_decay_factor(256, 87, 3) == pytest.approx(0.6978462714573, abs=1e-12)


def test_stepwise_examples():
    assert budget_stepwise(0, 256, 87, 3, 600) == 256
    # high-precision oracle for S_1 = S_0 * d
    d = (87 / 256) ** (1 / 3)
    assert budget_stepwise(150, 256, 87, 3, 600) == int(256 * d + 0.5) == 179
    assert budget_stepwise(149, 256, 87, 3, 600) == 256
    assert budget_stepwise(600, 256, 87, 3, 600) == 87


def test_linear_examples():
    assert budget_linear(0, 256, 87, 3, 600) == 256
    first = Fraction(256) - Fraction(169, 3)
    assert budget_linear(150, 256, 87, 3, 600) == round(first) == 200
    assert budget_linear(600, 256, 87, 3, 600) == 87


def test_fixed():
    assert trace(Fixed(8), 50) == [8] * 50


@given(st.integers(1, 300), st.integers(1, 300), st.integers(1, 8), st.integers(1, 2000))
def test_stepwise_and_linear_properties(a, b, n, total):
    s0, sf = max(a, b), min(a, b)
    for sched in (StepwiseExponential(s0, sf, n, total), Linear(s0, sf, n, total)):
        budgets = [sched(t) for t in range(0, total + 1, max(1, total // 200))] + [sched(total)]
        assert all(isinstance(x, int) and x >= 1 for x in budgets)
        assert all(x >= y for x, y in zip(budgets, budgets[1:]))
        assert sched(0) == s0
        assert sched(total) == sf


@given(st.integers(2, 300), st.integers(1, 8), st.integers(50, 2000))
def test_stepwise_has_n_transitions(s0, n, total):
    sched = StepwiseExponential(s0 * 10, 1 if s0 * 10 > 3 ** n else s0 * 10, n, total)
    full = [sched(t) for t in range(total + 1)]
    drops = sum(1 for x, y in zip(full, full[1:]) if y < x)
    assert drops <= n
    if sched.sf < sched.s0 and all(
        round(sched.s0 * sched.decay ** k) != round(sched.s0 * sched.decay ** (k + 1)) for k in range(n - 1)
    ):
        assert drops == n


def test_stepwise_256_to_87_setups_have_n_drops():
    for n in (1, 3, 7):
        full = trace(StepwiseExponential(256, 87, n, 600), 601)
        drops = [t for t in range(1, 601) if full[t] < full[t - 1]]
        assert len(drops) == n
        assert drops == [k * 600 // (n + 1) for k in range(1, n + 1)]


@given(st.integers(0, 5000), st.integers(1, 500), st.floats(0.05, 0.95), st.integers(1, 300))
def test_exponential_monotone(t, b0, gamma, interval):
    s = Exponential(b0, gamma, interval)
    assert 1 <= s(t + interval) <= s(t) <= b0


@pytest.mark.parametrize(
    "ctor",
    [
        lambda: Fixed(0),
        lambda: Exponential(256, 1.0, 100),
        lambda: Exponential(256, 0.5, 0),
        lambda: StepwiseExponential(10, 20, 3, 600),
        lambda: StepwiseExponential(256, 87, 0, 600),
        lambda: Linear(256, 0, 3, 600),
    ],
)
def test_validation(ctor):
    with pytest.raises(ValueError):
        ctor()
