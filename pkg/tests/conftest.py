import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from lambertmc.market import AgentParams, preset
from lambertmc.mc import McConfig

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def table1():
    sc, lam = preset("table1")
    return sc, AgentParams(0.5, lam)


@pytest.fixture
def table2():
    sc, lam = preset("table2")
    return sc, AgentParams(0.1, lam)


@pytest.fixture
def table3():
    sc, lam = preset("table3")
    return sc, AgentParams(0.5, lam)


@pytest.fixture
def mc():
    return McConfig(n_samples=10_000, seed=11)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    passed = sum(ok for ok, _ in results.values())
    terminalreporter.write_line(f"{passed}/{len(results)} criteria pass")
