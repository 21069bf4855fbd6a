import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from btlimit.pswf import BandParams, build_basis  # noqa: E402


@pytest.fixture(scope="session")
def basis():
    return build_basis(BandParams(math.pi, 1.0), 10)


@pytest.fixture(scope="session")
def basis6():
    return build_basis(BandParams(math.pi, 1.0), 6)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
