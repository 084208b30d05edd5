import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from acceptance_log import RESULTS  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[key])


@pytest.fixture(scope="session")
def reference_grid():
    """Unit disc, 128 boundary nodes, 64 x 32 interior nodes."""
    from gcinverse.geometry import make_disc
    return make_disc(1.0, 128, 32, n_theta=64)
