import time

import numpy as np
import pytest

from psc_extension.flow import icf_flow
from psc_extension.geometry import AngularGrid, AxiFunction
from psc_extension.paths import conformal_path, equalize_volume_form, reparametrize_plateau, volume_normalize


@pytest.fixture(scope="session")
def grid3():
    return AngularGrid(3, 128)


@pytest.fixture(scope="session")
def grid4():
    return AngularGrid(4, 128)


def _stages(u, check=True):
    raw = conformal_path(u, check=check)
    normalized = volume_normalize(raw)
    plateau = reparametrize_plateau(normalized)
    return raw, normalized, plateau, equalize_volume_form(plateau)


@pytest.fixture(scope="session")
def mild_path(grid3):
    """Conformal path of ``u = 1 + 0.15 cos(theta)``, n = 3, at every stage."""
    return _stages(AxiFunction(grid3, 1.0 + 0.15 * grid3.x))


@pytest.fixture(scope="session")
def strong_path(grid3):
    """Same stages for ``u = 1 + 0.3 cos(theta)`` with the positivity check disabled."""
    return _stages(AxiFunction(grid3, 1.0 + 0.3 * grid3.x), check=False)


def _timed_flow(grid):
    start = time.perf_counter()
    res = icf_flow(AxiFunction(grid, 1.0 + 0.3 * grid.x))
    res.diagnostics["wall_time"] = time.perf_counter() - start
    return res


@pytest.fixture(scope="session")
def flow3(grid3):
    return _timed_flow(grid3)


@pytest.fixture(scope="session")
def flow4(grid4):
    return _timed_flow(grid4)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
