import os

import pytest
from hypothesis import HealthCheck, settings

from rampsim.estimator import NodeSpec
from rampsim.params import RampParams

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def a100() -> NodeSpec:
    return NodeSpec(1555e9, 312e12, 1 / 1.41e9)


@pytest.fixture(scope="session")
def max_scale() -> RampParams:
    return RampParams(32, 32, 64)


@pytest.fixture(scope="session")
def p54() -> RampParams:
    return RampParams(3, 3, 6)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        verdict, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:<5} {verdict:<4}  {detail}")
