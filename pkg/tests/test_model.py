import math

import numpy as np
import pytest

from multilane import (
    CustomSpeed,
    DensityDomainError,
    FluxProfile,
    LaneTopology,
    LinearSpeed,
    ModelError,
    Side,
    SideProfiles,
    critical_density,
    eval_flux,
    eval_speed,
    side_of_cell,
)


@pytest.mark.parametrize("vmax,u,expected", [(1.5, 1.0, 0.0), (1.5, 0.7, 0.45), (2.0, 0.0, 2.0)])
def test_linear_speed_values(vmax, u, expected):
    assert eval_speed(LinearSpeed(vmax), u) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("vmax,u,expected", [(1.5, 0.0, 0.0), (1.5, 0.5, 0.375), (1.0, 0.6, 0.24)])
def test_linear_flux_values(vmax, u, expected):
    assert eval_flux(FluxProfile(LinearSpeed(vmax)), u) == pytest.approx(expected, abs=1e-15)


def test_density_outside_unit_interval_rejected():
    law = LinearSpeed(1.0)
    with pytest.raises(DensityDomainError):
        eval_speed(law, 1.0 + 1e-9)
    with pytest.raises(DensityDomainError):
        eval_flux(FluxProfile(law), np.array([0.2, -1e-6]))
    # rounding-level excursions are tolerated and clipped
    assert eval_speed(law, 1.0 + 1e-13) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("vmax", [0.5, 1.0, 1.5, 2.0])
def test_linear_critical_density(vmax):
    prof = FluxProfile(LinearSpeed(vmax))
    assert critical_density(prof) == 0.5
    assert prof.f_max == pytest.approx(vmax / 4)


def test_custom_critical_density_matches_calculus():
    # d/du u(1-u)^2 = (1-u)(1-3u) vanishes at u = 1/3
    law = CustomSpeed(lambda u: (1.0 - u) ** 2, derivative_bound=2.0, name="quadratic")
    prof = FluxProfile(law)
    assert critical_density(prof) == pytest.approx(1.0 / 3.0, abs=1e-7)
    assert prof.f_max == pytest.approx(4.0 / 27.0, abs=1e-14)


def test_custom_law_validation():
    with pytest.raises(ModelError):
        CustomSpeed(lambda u: 1.0 + 0.0 * u, 0.0)  # not decreasing
    with pytest.raises(ModelError):
        CustomSpeed(lambda u: 2.0 - u, 1.0)  # v(1) != 0
    with pytest.raises(ModelError):
        LinearSpeed(0.0)


def test_non_unimodal_flux_rejected():
    # flux rises, dips near u=0.3, rises again, then falls: two local maxima
    table = [[0.0, 1.0], [0.2, 0.95], [0.3, 0.2], [0.6, 0.19], [1.0, 0.0]]
    with pytest.raises(ModelError, match="unimodal"):
        FluxProfile(CustomSpeed.from_table(table))


def test_table_law():
    law = CustomSpeed.from_table([[0, 2], [0.5, 0.5], [1, 0]])
    assert law.derivative_bound == pytest.approx(3.0)
    assert law.sup_speed == 2.0
    assert law(0.25) == pytest.approx(1.25)
    assert law == CustomSpeed.from_table([[0, 2], [0.5, 0.5], [1, 0]])


@pytest.mark.parametrize("k,side", [(-1, Side.LEFT), (0, Side.RIGHT), (-100, Side.LEFT), (7, Side.RIGHT)])
def test_side_of_cell(k, side):
    assert side_of_cell(k) is side


def test_topology_requires_cuts_between_active_and_fictive():
    LaneTopology(3, [1, 2], [1, 2, 3], cut_left=[2])
    with pytest.raises(ModelError):
        LaneTopology(3, [1, 2], [1, 2, 3])
    with pytest.raises(ModelError):
        LaneTopology(3, [1, 2], [1, 2, 5], cut_left=[2])
    with pytest.raises(ModelError):
        LaneTopology(2, [], [1, 2])


def test_topology_queries():
    topo = LaneTopology(4, [1, 2, 3, 4], [2, 3], cut_left=[2], cut_right=[1, 3])
    assert topo.fictive(Side.RIGHT) == [1, 4]
    assert topo.fictive(Side.LEFT) == []
    assert topo.is_active(Side.RIGHT, 2) and not topo.is_active(Side.RIGHT, 4)
    assert topo.cuts(Side.RIGHT) == frozenset({1, 3})


def test_side_profiles_linear():
    prof = SideProfiles.linear(2, 1.5, [1.0, 2.0])
    assert prof.M == 2
    assert prof.get(Side.LEFT, 2).law == LinearSpeed(1.5)
    assert prof.get(Side.RIGHT, 2).law == LinearSpeed(2.0)
    with pytest.raises(ModelError):
        SideProfiles(prof.left, prof.right[:1])


def test_fictive_values():
    assert Side.LEFT.fictive_value == 0.0
    assert Side.RIGHT.fictive_value == 1.0
    assert math.isfinite(FluxProfile(LinearSpeed(1.0)).theta)
