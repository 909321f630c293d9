from pathlib import Path

import numba
import numpy as np
import pytest

from optochaos.simcore import VectorField


@numba.njit(cache=True)
def _lorenz(t, y, drive, p, out):
    out[0] = p[0] * (y[1] - y[0])
    out[1] = y[0] * (p[1] - y[2]) - y[1]
    out[2] = y[0] * y[1] - p[2] * y[2]


@numba.njit(cache=True)
def _linear(t, y, drive, p, out):
    # y' = A y with A given row-major in p
    n = y.shape[0]
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += p[i * n + j] * y[j]
        out[i] = s


def lorenz_field(sigma=10.0, rho=28.0, beta=8.0 / 3.0):
    return VectorField(3, _lorenz, np.array([sigma, rho, beta]), False, "lorenz")


def linear_field(matrix):
    a = np.asarray(matrix, dtype=float)
    return VectorField(a.shape[0], _linear, a.ravel().copy(), False, "linear")


@pytest.fixture(scope="session")
def lorenz():
    return lorenz_field()


DATA = Path(__file__).parent / "data"


@pytest.fixture
def chaos_ini():
    return DATA / "resonator_chaos.ini"


@pytest.fixture
def cavity_ini():
    return DATA / "cavity_short.ini"


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    def record(number: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
