from __future__ import annotations

import pytest
from hypothesis import settings

from evoc.domain import default_template_set

# first calls into jitted kernels include compilation time
settings.register_profile("evoc", deadline=None)
settings.load_profile("evoc")


@pytest.fixture(scope="session")
def ff1():
    return default_template_set("ff1")


@pytest.fixture(scope="session")
def ff2():
    return default_template_set("ff2")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
