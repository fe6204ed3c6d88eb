import math
import warnings

import numpy as np
import pytest

from sfwiener.filter_design import DesignOptions, design
from sfwiener.spectral_model import SCALE_FREE_SUPPORT, make_scale_free_example, make_rational_benchmark

SCALE_FREE_OMEGA_0 = 5.0
RATIONAL_OMEGA_0 = 10.0


@pytest.fixture(scope="session")
def scale_free():
    """``(S_xx, S_nn, S_yy, S_xy)`` of the Lorentzian-in-scale-free-noise example."""
    return make_scale_free_example()


@pytest.fixture(scope="session")
def rational():
    return make_rational_benchmark()


@pytest.fixture(scope="session")
def scale_free_filter(scale_free):
    S_xx, _, S_yy, S_xy = scale_free
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return design(S_xy, S_yy, DesignOptions(n_modes=100, omega_0=SCALE_FREE_OMEGA_0), S_xx=S_xx)


@pytest.fixture(scope="session")
def band_grid():
    return np.linspace(SCALE_FREE_SUPPORT[0], SCALE_FREE_SUPPORT[1], 8001)


def rel_l2(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


TWO_PI = 2 * math.pi


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[num])
