import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from starfd import SimulationParams, composite_channels, draw_channel_set  # noqa: E402
from starfd.schemes import initial_point  # noqa: E402

# acceptance lines collected by test_acceptance.py, echoed after the run
ACCEPTANCE_LINES = []


def instance(seed, m=8, half_duplex=False, **overrides):
    """Channels, setup and the aligned feasible start for one seeded draw.

    Returns ``(cc, setup, profile, powers)``; the last two are None when
    no feasible start exists.
    """
    p = SimulationParams(num_elements=m, **overrides)
    cc = composite_channels(draw_channel_set(p.geometry(), p.channel_params(), seed))
    setup = p.setup(half_duplex)
    init = initial_point(cc, setup, None, np.random.default_rng(seed), restarts=0)
    prof, pw = init if init is not None else (None, None)
    return cc, setup, prof, pw


def feasible_instances(count, m=8, **overrides):
    out, seed = [], 0
    while len(out) < count:
        cc, setup, prof, pw = instance(seed, m, **overrides)
        if prof is not None:
            out.append((seed, cc, setup, prof, pw))
        seed += 1
        if seed > 20 * count:
            raise RuntimeError("too few feasible draws")
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
