import sys

import numpy as np
import pytest

from ndrecon.grid import build_grid
from ndrecon.operators import build_operators
from ndrecon.wave import Coefficients, assemble_hyperbolic_nd_map


def q_shifted(x):
    return 1.0 / (x + 2.0)


def c_conformal(x):
    return np.cos((x + 1.0) / 2.0)


def _setup(n_x, c, q):
    grid = build_grid(-1.0, 1.0, n_x, 4.0, c)
    coeff = Coefficients.on_grid(grid, c, q)
    nd = assemble_hyperbolic_nd_map(grid, coeff)
    return grid, coeff, nd, build_operators(grid)


@pytest.fixture(scope="session")
def small_setup():
    """euclid-q coefficients on a coarse grid (N_x = 41): fast unit-level checks."""
    return _setup(41, 1.0, q_shifted)


@pytest.fixture(scope="session")
def ci_setup():
    """euclid-q coefficients at the ci resolution (N_x = 101)."""
    return _setup(101, 1.0, q_shifted)


@pytest.fixture(scope="session")
def full_setup():
    """euclid-q coefficients at full resolution (N_x = 401)."""
    return _setup(401, 1.0, q_shifted)


@pytest.fixture(scope="session")
def full_conformal_setup():
    return _setup(401, c_conformal, q_shifted)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
