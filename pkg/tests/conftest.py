import os

import pytest
from hypothesis import HealthCheck, settings

from carnot.algebra import CATALOG_NAMES, resolve_group

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=CATALOG_NAMES)
def catalog_group(request):
    return resolve_group(request.param)


@pytest.fixture
def heisenberg():
    return resolve_group("heisenberg")


@pytest.fixture
def engel():
    return resolve_group("engel")


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
