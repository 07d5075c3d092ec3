import pytest

from coopfront import reference_params
from coopfront.recipes import reference_run, reference_speed

# filled by test_acceptance; printed once at the end of the session
CRITERIA = {}


@pytest.fixture(scope="session")
def R():
    return reference_params()


@pytest.fixture(scope="session")
def golden_speed():
    return reference_speed()


@pytest.fixture(scope="session")
def spreading_run():
    return reference_run("spreading")


@pytest.fixture(scope="session")
def vanishing_run():
    return reference_run("vanishing")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[number])
