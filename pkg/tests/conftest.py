import numpy as np
import pytest

from cogbeam.channel import NetworkConfig, Receiver, realize_network
from cogbeam.config import load_config
from cogbeam.rng import SeededStream


def random_hermitian(rng, m):
    B = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return 0.5 * (B + B.conj().T)


def random_psd(rng, m, rank=None):
    rank = m if rank is None else rank
    B = rng.standard_normal((m, rank)) + 1j * rng.standard_normal((m, rank))
    return B @ B.conj().T


def empty_network(M_S=4, N_S=4, d_SS=10.0, N0=1.0, P_S_max=1e5):
    """Secondary link with no primary users."""
    return NetworkConfig(M_S=M_S, N_S=N_S, M=[], N=[], P=[], P_S_max=P_S_max, receivers=[], d_SS=d_SS,
                         d_kS=[], d_Sk=[], d_kj=[], N0=N0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def k2():
    return load_config("k2_paper")


@pytest.fixture(scope="session")
def k4():
    return load_config("k4_paper")


@pytest.fixture(scope="session")
def k2_real(k2):
    return realize_network(k2.network, SeededStream(7))


@pytest.fixture(scope="session")
def k4_real(k4):
    return realize_network(k4.network, SeededStream(7))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
