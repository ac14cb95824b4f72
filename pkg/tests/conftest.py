import sys

import numpy as np
import pytest

from noongen import accel
from noongen.fock import StateVector


@pytest.fixture(params=[True, False], ids=["numba", "numpy"])
def backend(request):
    if request.param and not accel.NUMBA_AVAILABLE:
        pytest.skip("numba not installed")
    with accel.backend(request.param):
        yield request.param


def random_state(rng, modes, max_photons, terms):
    occ = rng.integers(0, max_photons + 1, size=(terms, modes))
    amp = rng.normal(size=terms) + 1j * rng.normal(size=terms)
    s = StateVector(occ, amp, modes)
    return s * (1.0 / np.sqrt(s.norm_squared()))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
