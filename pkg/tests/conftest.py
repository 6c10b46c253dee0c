import math

import pytest

from multilane import LaneTopology, Scenario, SideProfiles
from multilane.scenario_io import load_bundled

INF = math.inf


def two_to_three(v_right=1.0, dx=0.01, T=1.0, lane1_left=0.7, **kw):
    """Two lanes on the left widening to three on the right, third lane empty on arrival."""
    topo = LaneTopology(3, [1, 2], [1, 2, 3], cut_left=[2])
    prof = SideProfiles.linear(3, 1.5, v_right)
    init = [
        [(-INF, 0.0, lane1_left), (0.0, INF, 0.7)],
        [(-INF, INF, 0.6)],
        [(0.0, INF, 0.5)],
    ]
    return Scenario(topo, prof, init, T=T, dx=dx, **kw)


def single_lane(pieces, v=1.0, dx=0.01, T=1.0, **kw):
    topo = LaneTopology(1, [1], [1])
    return Scenario(topo, SideProfiles.linear(1, v, v), [pieces], T=T, dx=dx, **kw)


@pytest.fixture
def s31_coarse():
    return load_bundled("s31_2to3").with_(dx=0.01)


@pytest.fixture
def s32_coarse():
    return load_bundled("s32_3to2").with_(dx=0.01)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
