import os
import warnings

import pytest
from hypothesis import HealthCheck, settings

from lozenge.polygon import LimitPolygon, PolygonSpec

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def tiny():
    """The N=2 test polygon: top row (2, 0), two tilings."""
    return PolygonSpec.from_values(2, ["-1/2", "3/2"], ["1/2", "5/2"])


@pytest.fixture
def hexagon():
    return LimitPolygon.from_values(["-1", "0.5"], ["-0.5", "1"])


@pytest.fixture(autouse=True)
def _quiet_numpy():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
