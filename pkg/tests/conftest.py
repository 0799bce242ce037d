import pytest

from nsystem.exact import build_table, moments
from nsystem.model import Shape, SystemParams, symmetric_system


@pytest.fixture(scope="session")
def sym08():
    return symmetric_system(0.8)


@pytest.fixture(scope="session")
def sym08_table(sym08):
    return build_table(sym08)


@pytest.fixture(scope="session")
def sym08_moments(sym08_table):
    return moments(sym08_table)


@pytest.fixture(scope="session")
def tiny():
    return SystemParams(lambda1=0.4, lambda2=0.2, n1=1, n2=1, mu1=1.0, mu2=1.0)


@pytest.fixture(scope="session")
def sym_shape():
    return Shape(alpha=0.8, theta=0.5, rho=0.5)
