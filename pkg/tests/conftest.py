import numpy as np
import pytest

from elliptic_double.special_functions import default_params


@pytest.fixture(scope="session")
def params():
    return default_params()


@pytest.fixture
def rng():
    return np.random.default_rng(0xE11EC)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one acceptance-criterion line; printed in the terminal summary."""
    def record(line: str) -> None:
        _ACCEPTANCE.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
