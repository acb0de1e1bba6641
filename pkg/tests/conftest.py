import numpy as np
import pytest

from lyingev.dataset import LabeledDataset, build_honest, build_malicious
from lyingev.trace_ingest import generate_synthetic_trace


def synthetic_traces(n, days, seed=0):
    return [generate_synthetic_trace([seed, i], days, vehicle_id=f"ev{i:04d}") for i in range(n)]


@pytest.fixture(scope="session")
def small_honest():
    return build_honest(synthetic_traces(6, 4), 4, seed=5)


@pytest.fixture(scope="session")
def small_full(small_honest):
    return LabeledDataset.concat([small_honest, build_malicious(small_honest, seed=5)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one verdict line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
