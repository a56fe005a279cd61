import numpy as np
import pytest

from gpquintic.spectral import DispersionCoefficients, GridConfig, ScatteringField


def sech_field(grid: GridConfig, amplitude: float = 0.15, width: float = 40.0) -> ScatteringField:
    return ScatteringField(amplitude / np.cosh(grid.x / width), 0.0, grid)


@pytest.fixture
def default_grid():
    return GridConfig()


@pytest.fixture
def small_grid():
    return GridConfig(L=40.0, n_x=64)


@pytest.fixture
def coeffs():
    return DispersionCoefficients()


@pytest.fixture
def nonlocal_coeffs():
    return DispersionCoefficients(-1j, 0.0, 1j)


@pytest.fixture
def p0(default_grid):
    return sech_field(default_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# acceptance verdicts, filled by test_acceptance and echoed after the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split(".")[0]), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
