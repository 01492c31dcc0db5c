import numpy as np
import pytest
from hypothesis import settings

from krflow import Background, MetricState, RadialGrid

settings.register_profile("krflow", deadline=None, max_examples=25)
settings.load_profile("krflow")


def smooth_u(a=0.3, b=0.7, c=0.2):
    """u = P'(s) of a smooth perturbation of the flat potential, with u'."""

    def u(s):
        return np.exp(s) * (1 + a * np.exp(-((s - c) ** 2))) + b * np.exp(2 * s) / (1 + np.exp(s))

    def du(s):
        e, g = np.exp(s), a * np.exp(-((s - c) ** 2))
        return e * (1 + g) + e * g * (-2 * (s - c)) + b * (2 * e * e / (1 + e) - e**3 / (1 + e) ** 2)

    return u, du


@pytest.fixture
def flat_grid():
    return RadialGrid(-3.0, 3.0, 241)


@pytest.fixture
def ke_grid():
    return RadialGrid(-6.0, -0.05, 241)


def flat_state(grid, n=2, c=1.0):
    return MetricState.from_background(grid, Background.flat(n), c)


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: criterion(ok, detail)."""
    key = request.node.name.split("_")[1].upper()

    def record(ok, detail):
        ACCEPTANCE[key] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'} {detail}")
