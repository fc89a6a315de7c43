import pytest

from fracinv.grid import build_grid
from fracinv.operator import assemble_operator


@pytest.fixture(scope="session")
def grid():
    return build_grid()


@pytest.fixture(scope="session")
def op(grid):
    return assemble_operator(grid, 0.5)


@pytest.fixture(scope="session")
def small_grid():
    return build_grid(2.0, 101)
