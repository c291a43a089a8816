import numpy as np
import pytest

from chiralcurl.lattice import (
    MaterialMask,
    lattice_from_shifts,
    neighbor_set,
    simple_cubic,
)
from chiralcurl.curl import assemble_curl
from chiralcurl.spectral import spectral_basis

K_DEFAULT = (0.12, -0.3, 0.45)

# shift-parameter families covering the lattice kinds the assembly has to
# handle: plain, single-shift, both wrap flags, the excess-count cases, and
# full-period splits; instantiated against the grid dims of each test
def make_shift_matrix(n1: int, n2: int) -> list[dict]:
    h1 = max(n1 // 2, 1)
    return [
        dict(),
        dict(m11=1, m12=1, m13=0),
        dict(m11=1, m12=2, m13=1),
        dict(m2=1, m11=1, m12=2, m13=1),
        dict(rho2=1, m2=2, m11=1, m12=2, m13=1),
        dict(rho11=1, rho12=1, m11=n1 - 2, m12=n1 - 1, m13=1),
        dict(rho12=1, m11=0, m12=n1, m13=0),
        dict(rho2=1, rho11=1, rho12=2, rho13=0, m2=n2 // 2, m11=0, m12=n1, m13=0),
        dict(m2=n2, m11=1, m12=2, m13=1),
        dict(rho2=1, m2=0, m11=1, m12=2, m13=1, rho11=0, rho12=1, rho13=1),
        dict(rho11=1, rho13=-1, m11=1, m12=2, m13=1),
        dict(rho2=1, rho11=1, rho12=2, rho13=1, m2=1, m11=h1, m12=2 * h1, m13=h1),
        dict(rho12=1, rho13=1, rho11=0, m11=h1, m12=h1 + 1, m13=1),
        dict(m11=n1, m12=n1, m13=0),
    ]


SHIFT_MATRIX = make_shift_matrix(4, 4)


def shift_spec(i, n=(4, 4, 4), k=K_DEFAULT):
    matrix = make_shift_matrix(n[0], n[1])
    return lattice_from_shifts(n, k=k, **matrix[i % len(matrix)])


@pytest.fixture(scope="session")
def cubic3():
    return simple_cubic((3, 3, 3), k=K_DEFAULT)


@pytest.fixture(scope="session")
def cubic4():
    return simple_cubic((4, 4, 4), k=K_DEFAULT)


@pytest.fixture(scope="session")
def cubic5():
    return simple_cubic((5, 5, 5), k=K_DEFAULT)


@pytest.fixture(scope="session")
def blocks3(cubic3):
    return assemble_curl(cubic3)


@pytest.fixture(scope="session")
def blocks4(cubic4):
    return assemble_curl(cubic4)


@pytest.fixture(scope="session")
def blocks5(cubic5):
    return assemble_curl(cubic5)


@pytest.fixture(scope="session")
def basis3(cubic3):
    return spectral_basis(cubic3)


@pytest.fixture(scope="session")
def basis4(cubic4):
    return spectral_basis(cubic4)


@pytest.fixture(scope="session")
def basis5(cubic5):
    return spectral_basis(cubic5)


def cross_mask(spec, center=None, eps_i=13.0, eps_o=1.0):
    """Mask holding one interior node: a grid point plus its 6 neighbors."""
    if center is None:
        center = tuple((d + 1) // 2 for d in spec.dims)
    nodes = neighbor_set(*center, spec)
    return MaterialMask(spec.n, np.array(sorted(nodes)), eps_i, eps_o)


def empty_mask(spec, eps_i=13.0, eps_o=1.0):
    return MaterialMask(spec.n, np.array([], dtype=int), eps_i, eps_o)


def full_mask(spec, eps_i=13.0, eps_o=1.0):
    return MaterialMask(spec.n, np.arange(1, spec.n + 1), eps_i, eps_o)


@pytest.fixture(scope="session")
def cross3(cubic3):
    return cross_mask(cubic3)


@pytest.fixture(scope="session")
def cross4(cubic4):
    return cross_mask(cubic4)


@pytest.fixture(scope="session")
def cross5(cubic5):
    return cross_mask(cubic5)
