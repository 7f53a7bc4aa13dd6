import numpy as np
import pytest

from compwave.eigen import eigen_frame
from compwave.model import BnsParameters, make_bns_model, make_burgers_model


@pytest.fixture(scope="session")
def burgers():
    return make_burgers_model()


@pytest.fixture(scope="session")
def bns1():
    return make_bns_model(BnsParameters(nu=0.1, gamma=1.4, d=1))


@pytest.fixture(scope="session")
def bns2():
    return make_bns_model(BnsParameters(nu=0.1, gamma=1.4, d=2))


@pytest.fixture(scope="session")
def frame1(bns1):
    return eigen_frame(bns1, [1.0, 0.0])


@pytest.fixture(scope="session")
def burgers_frame(burgers):
    return eigen_frame(burgers, [1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# gate lines collected by the acceptance suite, printed once at the end
GATE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if GATE_LINES:
        terminalreporter.section("acceptance gates")
        for line in GATE_LINES:
            terminalreporter.write_line(line)
