import numpy as np
import pytest

from coaltangent.rng import stream


@pytest.fixture
def rng(request):
    return stream(20240611, request.node.name)


def ultrametric_ok(D, tol=1e-12):
    n = D.shape[0]
    for i in range(n):
        for j in range(n):
            if np.any(D[i, j] > np.maximum(D[i, :], D[:, j]) + tol):
                return False
    return True


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE_LINES
    except ImportError:
        return
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
