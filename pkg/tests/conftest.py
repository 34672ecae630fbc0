import numpy as np
import pytest

from budgetgrpo.policy import FeatureSpec, Policy

SMALL_SPEC = FeatureSpec(operand_max=2, answer_slots=2)


@pytest.fixture
def small_spec():
    return SMALL_SPEC


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_policy(spec, rng, scale=0.7):
    return Policy(spec, rng.normal(scale=scale, size=spec.n_params))


_criteria: dict[int, list[bool]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        _criteria.setdefault(marker.args[0], []).append(not failed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        verdict = "PASS" if all(_criteria[n]) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict}")
