import pytest

from src.model import BasisMap, build_hamiltonian, example_params
from src.spectrum import diagonalize_by_symmetry
from src.symmetry import build_transform


class System:
    """Parameters with their assembled and diagonalized Hamiltonian"""

    def __init__(self, p):
        self.p = p
        self.b = BasisMap.for_params(p)
        self.T = build_transform(self.b)
        self.H = build_hamiltonian(p, self.b)
        self.es = diagonalize_by_symmetry(self.H, self.T)


@pytest.fixture(scope='session')
def example1():
    return example_params(1)


@pytest.fixture(scope='session')
def example2():
    return example_params(2)


@pytest.fixture(scope='session')
def example3():
    return example_params(3)


@pytest.fixture(scope='session')
def small_params():
    """Example 2 couplings on a short continuum, cheap enough for CLI runs"""
    return example_params(2, N=40)


@pytest.fixture(scope='session')
def system1(example1):
    return System(example1)


@pytest.fixture(scope='session')
def system2(example2):
    return System(example2)


@pytest.fixture(scope='session')
def system3(example3):
    return System(example3)


@pytest.fixture
def small_config_file(tmp_path):
    path = tmp_path / 'small.conf'
    path.write_text(
        "# example 2 couplings, short continuum\n"
        "dV = 0.018\n"
        "N = 40\n"
        "t_max = 200\n"
        "t_steps = 100\n",
        encoding='utf-8',
    )
    return path
