import random

import pytest

from fccfold.chain import Sequence, initialise


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture
def seq20():
    return Sequence("MKVLAGHTEWRFPQISNDYC", "s20")


def random_conf(n, rng):
    return initialise(n, rng)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
