import numpy as np
import pytest

from divrate.eigensolve import ModelSpec, solve_eigenpair


@pytest.fixture(scope="session")
def unit_model():
    return ModelSpec("one", "one", 1.0, 4.0)


@pytest.fixture(scope="session")
def unit_pair(unit_model):
    return solve_eigenpair(unit_model)


@pytest.fixture(scope="session")
def power_model():
    return ModelSpec("linear", "square", 1.0, 4.0)


@pytest.fixture(scope="session")
def power_pair(power_model):
    return solve_eigenpair(power_model)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
