import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from splf.basis import build_basis  # noqa: E402


@pytest.fixture(scope="session")
def basis2():
    return build_basis(2, 8)


@pytest.fixture(scope="session")
def basis3():
    return build_basis(3, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Append a one-line acceptance verdict; all lines are echoed at session end."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def emit(criterion, ok, detail):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} | {detail}"
        lines.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
