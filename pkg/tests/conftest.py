import functools

import pytest
from hypothesis import HealthCheck, settings

from confbound.invariants import invariants_report
from confbound.models import catalog
from confbound.quadrature import QuadratureRule

settings.register_profile("ci", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True)
settings.load_profile("ci")


@functools.lru_cache(maxsize=None)
def model(name: str):
    return catalog(name)


@functools.lru_cache(maxsize=None)
def report(name: str, order: int = 24):
    return invariants_report(model(name), QuadratureRule(order))


@pytest.fixture
def get_model():
    return model


@pytest.fixture
def get_report():
    return report


# one line per acceptance criterion, echoed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
