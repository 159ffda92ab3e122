import sys

import numpy as np
import pytest

from causal_dr.synthdata import DgpParams, make_dataset


@pytest.fixture
def benchmark_params():
    return DgpParams(rho=0.2)


@pytest.fixture
def small_dataset(benchmark_params):
    return make_dataset(200, benchmark_params, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    """Print one PASS/FAIL line per acceptance criterion after the run."""
    module = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    verdicts = getattr(module, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for line in verdicts:
        terminalreporter.write_line(line)
