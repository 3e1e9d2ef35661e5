import math
import sys

import numpy as np
import pytest

from ctpt import PhysicalParams, ScaleProfile

SQRT2 = math.sqrt(2.0)

DEFAULTS = PhysicalParams()
TRIG_PARAMS = PhysicalParams(omega=1.0, omega0=SQRT2)
GROW_PARAMS = PhysicalParams(omega=SQRT2, omega0=1.0)

REGIMES = {
    "constant": ScaleProfile.constant(DEFAULTS),
    "trig": ScaleProfile.trig(TRIG_PARAMS),
    "cosh": ScaleProfile.cosh(GROW_PARAMS),
    "caldirola_kanai": ScaleProfile.caldirola_kanai(GROW_PARAMS),
}

# sampling windows inside each regime's domain (trig alpha vanishes at t = pi/2)
WINDOWS = {"constant": (0.0, 2.0), "trig": (0.0, 1.2), "cosh": (0.0, 2.0), "caldirola_kanai": (0.0, 2.0)}


def window_times(name, count):
    lo, hi = WINDOWS[name]
    return np.linspace(lo, hi, count)


@pytest.fixture(params=list(REGIMES))
def regime(request):
    """(name, profile) for each closed-form regime."""
    return request.param, REGIMES[request.param]


@pytest.fixture
def params():
    return DEFAULTS


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
