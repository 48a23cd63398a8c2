import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from noddle.graph import KARATE_PATH as KARATE  # noqa: E402


@pytest.fixture(scope="session")
def karate():
    from noddle.graph import load_edge_list

    return load_edge_list(KARATE)


@pytest.fixture(scope="session")
def karate_path():
    return os.path.abspath(KARATE)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
