import itertools

import numpy as np
import pytest

from dppcell.data_io import preset


def cofactor_det(m):
    """Determinant by Laplace expansion along the first row (small matrices only)."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 0:
        return 1.0
    if n == 1:
        return float(m[0, 0])
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1) ** j * m[0, j] * cofactor_det(minor)
    return total


@pytest.fixture(scope="session")
def houston_gauss():
    return preset("houston-gauss")


@pytest.fixture(scope="session")
def three_families():
    return [preset("houston-gauss"), preset("houston-cauchy"), preset("houston-gengamma")]


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
