import numpy as np
import pytest
from hypothesis import settings

from npclust import use_backend

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    """Run the test once per kernel implementation."""
    with use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(rng, n_max=60, d_max=5):
    n = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    k = int(rng.integers(1, 5))
    centers = rng.normal(scale=5.0, size=(k, d))
    X = centers[rng.integers(k, size=n)] + rng.normal(size=(n, d))
    lam = float(rng.uniform(0.5, 30.0))
    return X, lam


ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    """Record and print one acceptance line; returns ``ok`` for asserting."""
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
