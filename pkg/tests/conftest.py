import numpy as np
import pytest

from linboltz import build_grid, build_table, maxwell_molecule, sphere_quadrature


@pytest.fixture(scope="session")
def grid6():
    return build_grid(6, 5.0)


@pytest.fixture(scope="session")
def sphere12():
    return sphere_quadrature(12)


@pytest.fixture(scope="session")
def kernel_unit():
    return maxwell_molecule(1.0)


@pytest.fixture(scope="session")
def table6(grid6, sphere12, kernel_unit):
    return build_table(grid6, sphere12, kernel_unit)


@pytest.fixture(scope="session")
def grid8():
    return build_grid(8, 5.0)


@pytest.fixture(scope="session")
def table8(grid8, sphere12, kernel_unit):
    return build_table(grid8, sphere12, kernel_unit)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
