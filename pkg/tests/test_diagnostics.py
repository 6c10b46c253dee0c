import math

import numpy as np
import pytest

from multilane import LaneTopology, ModelError, SideProfiles, project_initial, run
from multilane import diagnostics as dg
from multilane.grid import Grid
from multilane.solver import advance

from conftest import INF, single_lane, two_to_three


def test_active_norm_examples():
    grid = Grid(-2, 2, 0.1, 0.1)
    topo = LaneTopology(3, [1, 2], [1, 2, 3], cut_left=[2])
    assert dg.active_l1_norm(np.zeros((3, grid.K)), grid, topo) == 0.0
    rho = np.full((3, grid.K), 0.5)
    topo2 = LaneTopology(2, [1, 2], [1, 2])
    assert dg.active_l1_norm(rho[:2], grid, topo2) == pytest.approx(4.0, abs=1e-13)
    # a fictive right lane full of ones adds nothing
    topo3 = LaneTopology(3, [1, 2], [1, 2], cut_left=[2], cut_right=[2])
    rho3 = rho.copy()
    rho3[2, :] = 0.0
    rho3[2, grid.junction:] = 1.0
    assert dg.active_l1_norm(rho3, grid, topo3) == pytest.approx(4.0, abs=1e-13)


def test_total_variation_examples():
    assert dg.total_variation(np.full(7, 0.3)) == 0.0
    assert dg.total_variation(np.r_[np.zeros(4), np.full(4, 0.5)]) == 0.5
    assert dg.total_variation(np.linspace(0, 1, 11)) == pytest.approx(1.0, abs=1e-15)
    assert dg.total_variation(np.array([0.0, 1.0, 0.0, 1.0]), 1, 3) == 2.0
    assert dg.total_variation(np.array([0.0, 1.0, 0.0, 1.0]), 0, 1) == 1.0


def _recorded_step(sc, n_steps=7):
    grid = sc.grid()
    rho = project_initial(sc, grid)
    for _ in range(n_steps):
        rho = advance(rho, grid, sc).rho_next
    return advance(rho, grid, sc), grid


@pytest.mark.parametrize("c", [0.0, 1.0])
def test_entropy_residual_vanishes_at_extreme_constants(c):
    sc = two_to_three(dx=0.05)
    data, grid = _recorded_step(sc)
    res = dg.entropy_residuals(data.rho_n, data.rho_half, data.rho_next, c, grid, sc)
    assert np.max(np.abs(res)) <= 1e-14


def test_entropy_residual_nonpositive_mid_constant():
    sc = two_to_three(dx=0.05)
    data, grid = _recorded_step(sc)
    for j in (1, 2, 3):
        res = dg.entropy_residual(data.rho_n, data.rho_half, data.rho_next, 0.4, j, grid, sc)
        assert res.shape == (grid.K,)
        assert res.max() <= 1e-12


def test_entropy_residual_brute_force_single_cell():
    # evaluate the inequality term by term for one interior cell of lane 2
    sc = two_to_three(dx=0.05)
    data, grid = _recorded_step(sc)
    from multilane.numerics import interface_fluxes, source_rates

    c, k, r = 0.4, grid.junction + 3, 1
    lam = grid.lam
    Fmax = interface_fluxes(np.maximum(data.rho_n, c), grid, sc.profiles)[r]
    Fmin = interface_fluxes(np.minimum(data.rho_n, c), grid, sc.profiles)[r]
    fc = sc.profiles.right[r](c)
    S = source_rates(data.rho_half, grid, sc.topology, sc.profiles)
    expected = (abs(data.rho_next[r, k] - c) - abs(data.rho_n[r, k] - c)
                + lam * ((Fmax[k + 1] - Fmin[k + 1]) - (Fmax[k] - Fmin[k]))
                - lam * abs(fc - fc)
                - grid.dt * np.sign(data.rho_next[r, k] - c) * (S[r, k] - S[r + 1, k]))
    got = dg.entropy_residual(data.rho_n, data.rho_half, data.rho_next, c, 2, grid, sc)[k]
    assert got == pytest.approx(expected, abs=1e-15)


def test_entropy_residual_rejects_bad_input():
    sc = two_to_three(dx=0.1)
    grid = sc.grid()
    rho = project_initial(sc, grid)
    with pytest.raises(ValueError):
        dg.entropy_residuals(rho, rho, rho[:, :-1], 0.3, grid, sc)
    with pytest.raises(ValueError):
        dg.entropy_residuals(rho, rho, rho, 1.5, grid, sc)


def test_entropy_check_logged_and_recomputed_agree():
    sc = two_to_three(dx=0.05, T=0.2)
    cs = (0.0, 0.3, 0.6, 1.0)
    logged = dg.entropy_check(run(sc, entropy_c=cs), cs)
    recomputed = dg.entropy_check(run(sc, keep_history=True), cs)
    assert logged.passed and recomputed.passed
    assert logged.max_residual == pytest.approx(recomputed.max_residual, abs=1e-15)
    with pytest.raises(ModelError):
        dg.entropy_check(run(sc), cs)


def test_time_continuity_stationary():
    res = run(single_lane([(-INF, INF, 0.4)], dx=0.1, T=0.3))
    rep = dg.time_continuity_check(res)
    assert rep.measured == 0.0 and rep.passed


def test_time_continuity_bound_formula():
    res = run(two_to_three(dx=0.05, T=1.0))
    M, T = 3, 1.0
    V, VC1 = 1.5, 3.0
    tv = sum(dg.total_variation(row) for row in res.initial)
    dt = res.grid.dt
    expected = 2 * math.exp(4 * VC1 * T) * dt * (VC1 * tv + M * V + 2 * V * res.initial_norm)
    assert dg.time_continuity_bound(res) == pytest.approx(expected, rel=1e-14)
    assert dg.time_continuity_check(res).passed


def test_bv_constant_data():
    res = run(single_lane([(-INF, INF, 0.4)], dx=0.05, T=0.3), keep_history=True)
    rep = dg.bv_check(res, 0.5, 1.5, 0.2)
    assert rep.measured == 0.0 and rep.passed


def test_bv_interval_validation():
    grid = Grid(-2, 2, 0.05, 0.1)
    with pytest.raises(ModelError, match="junction"):
        dg.bv_indices(grid, -0.5, 0.5, 0.2)
    with pytest.raises(ModelError):
        dg.bv_indices(grid, 0.3, 1.5, 0.2)  # 2s >= |a|
    with pytest.raises(ModelError):
        dg.bv_indices(grid, 0.5, 1.5, 0.01)  # s <= dx
    idx = dg.bv_indices(grid, 0.5, 1.5, 0.2)
    assert np.all((grid.centers[idx] >= 0.5) & (grid.centers[idx] <= 1.5))


def test_conservation_balance_and_failure_detection():
    res = run(two_to_three(dx=0.05))
    rep = dg.conservation_check(res)
    assert rep.passed
    assert rep.detail["max_unbalanced_drift"] > rep.bound  # the window ends do carry flux
    res.records[3].l1_active += 1e-6
    assert not dg.conservation_check(res).passed


def test_fictive_check_detects_tampering():
    res = run(two_to_three(dx=0.1, T=0.1))
    assert dg.fictive_check(res).passed
    res.snapshots[-1][1][2, 0] = 1e-300
    assert not dg.fictive_check(res).passed


def test_bounds_check_detects_injected_negative():
    res = run(two_to_three(dx=0.1, T=0.1))
    assert dg.bounds_check(res).passed
    res.records[0].rho_min = -1e-9
    assert not dg.bounds_check(res).passed


def test_l1_distance_identical_runs():
    a = run(two_to_three(dx=0.05))
    b = run(two_to_three(dx=0.05))
    cmp = dg.l1_distance(a, b)
    assert cmp.initial == 0.0 and cmp.final == 0.0 and cmp.passed


def test_l1_distance_perturbed():
    a = run(two_to_three(dx=0.05))
    b = run(two_to_three(dx=0.05, lane1_left=0.75))
    cmp = dg.l1_distance(a, b)
    assert cmp.initial == pytest.approx(0.1, abs=1e-12)
    assert cmp.passed


def test_l1_distance_rejects_mismatched_runs():
    a = run(two_to_three(dx=0.05, T=0.1))
    b = run(two_to_three(dx=0.05, T=0.1, v_right=2.0))
    with pytest.raises(ModelError):
        dg.l1_distance(a, b)


def test_order_preservation():
    sigma = [(-INF, -0.3, 0.9), (-0.3, INF, 0.4)]
    rho = [(a, b, 0.9 * v) for a, b, v in sigma]
    a = run(single_lane(rho, dx=0.05, T=0.5), keep_history=True)
    b = run(single_lane(sigma, dx=0.05, T=0.5), keep_history=True)
    assert dg.order_violation(a, b) <= 0.0


def test_restrict():
    rho = np.arange(8.0).reshape(1, 8)
    assert np.array_equal(dg.restrict(rho, 2), [[0.5, 2.5, 4.5, 6.5]])
    with pytest.raises(ValueError):
        dg.restrict(np.zeros((1, 5)), 2)


def test_convergence_study_needs_two_levels():
    with pytest.raises(ValueError):
        dg.convergence_study(two_to_three(dx=0.1), levels=1)


def test_reports_serialise():
    res = run(two_to_three(dx=0.1, T=0.1))
    d = dg.bounds_check(res).as_dict()
    assert set(d) >= {"name", "measured", "bound", "passed", "margin"}
