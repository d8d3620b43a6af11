import math

import numpy as np
import pytest

from qbat import BatterySpectrum, DensityState, PulseSchedule, PulseShape

_ACCEPTANCE_LINES = []


@pytest.fixture
def spectrum():
    return BatterySpectrum(0.0, 1.0, 1.95)


@pytest.fixture
def ground():
    return DensityState.ground()


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def closed_loop(shape13=None, tau=1.0, phi=math.pi / 2):
    return PulseSchedule(shape13=shape13 or PulseShape.sin_pi(), tau=tau, phi=phi)


def random_density(rng, rank=3):
    x = rng.normal(size=(3, rank)) + 1j * rng.normal(size=(3, rank))
    m = x @ x.conj().T
    return m / np.trace(m)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
