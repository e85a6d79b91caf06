import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hybridrisk.synthetic import pima_like, primary_like  # noqa: E402
from hybridrisk.tabular import split_train_test  # noqa: E402


@pytest.fixture(scope="session")
def cohort():
    return primary_like(1200, seed=11, missing=0.03)


@pytest.fixture(scope="session")
def split(cohort):
    return split_train_test(cohort, 0.7, seed=5)


@pytest.fixture(scope="session")
def external():
    return pima_like(seed=4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
