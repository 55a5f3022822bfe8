import math

import numpy as np
import pytest

from hbolab.spectral import make_grid


def fd_weights(order: int, half: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Central finite-difference weights on offsets -half..half (Fornberg's recurrence)."""
    offs = np.arange(-half, half + 1, dtype=float)
    n = len(offs)
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    for i in range(1, n):
        c2 = 1.0
        for j in range(i):
            c3 = offs[i] - offs[j]
            c2 *= c3
            for m in range(min(i, order), -1, -1):
                prev = c[i - 1, m - 1] if m else 0.0
                c[i, m] = c1 * (m * prev - offs[i - 1] * c[i - 1, m]) / c2
            for m in range(min(i, order), -1, -1):
                prev = c[j, m - 1] if m else 0.0
                c[j, m] = (offs[i] * c[j, m] - m * prev) / c3
        c1 = c2
    return offs, c[:, order]


def fd_derivative(fn, point, axis: int, order: int, h: float, half: int = 4):
    offs, w = fd_weights(order, half)
    point = np.asarray(point, dtype=float)
    total = 0.0
    for o, c in zip(offs, w):
        p = point.copy()
        p[axis] += o * h
        total = total + c * fn(p)
    return total / h ** order


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid2():
    return make_grid(2, 64, 2 * math.pi)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
