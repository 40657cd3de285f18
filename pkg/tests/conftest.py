import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from ldlcert.correlations import Scenario  # noqa: E402
from ldlcert.fileio import table1  # noqa: E402
from ldlcert.quantum import born_behavior, hardy_measurements, hardy_state  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def binary():
    return Scenario.binary()


@pytest.fixture(scope="session")
def hardy():
    return born_behavior(hardy_state(), hardy_measurements())


@pytest.fixture(scope="session")
def table_one():
    return table1()



def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
