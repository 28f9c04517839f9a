import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config._lpmc_criteria = {}


@pytest.fixture
def record_criterion(request):
    """``record_criterion(n, passed, detail)``: print and remember one acceptance verdict."""
    store = request.config._lpmc_criteria

    def record(number, passed, detail):
        line = f"CRITERION {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        store[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = getattr(config, "_lpmc_criteria", {})
    if store:
        terminalreporter.section("acceptance criteria")
        for number in sorted(store):
            terminalreporter.write_line(store[number])
