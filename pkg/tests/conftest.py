import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from road.experiments import two_dim_model  # noqa: E402

TWO_DIM_SIGMA = np.array([[1.0, 1.0], [1.0, 2.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


@pytest.fixture
def two_dim_truth():
    return two_dim_model(2.0)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance and acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.RESULTS:
            terminalreporter.write_line(line)
