import numpy as np
import pytest

from nlgcompress import games, strategies

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def msg():
    return games.magic_square_game()


@pytest.fixture(scope="session")
def msg_strat():
    return strategies.msg_canonical_strategy()


@pytest.fixture(scope="session")
def ghz3():
    return games.ghz3_game()


@pytest.fixture(scope="session")
def ghz3_strat():
    return strategies.ghz3_canonical_strategy()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_unitary(d, rng):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
