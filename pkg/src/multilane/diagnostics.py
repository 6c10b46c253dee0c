"""Discrete estimates satisfied by the split Godunov scheme, as executable checks.

Everything here works on recorded run data: the active-lane norm and its
balance, [0, 1] bounds, persistence of fictive lanes, the cell entropy
inequality for Kruzhkov constants, the time-continuity and local BV bounds
with their explicit constants, and L1 distances between paired runs.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .grid import Grid
from .model import DOMAIN_TOL, LaneTopology, ModelError, Side
from .numerics import interface_fluxes, source_rates

if TYPE_CHECKING:
    from .solver import RunResult, Scenario

ENTROPY_TOL = 1e-12
DEFAULT_C_GRID = tuple(round(0.1 * i, 10) for i in range(11))


@dataclass
class BoundReport:
    name: str
    measured: float
    bound: float
    passed: bool
    detail: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.bound - self.measured

    def as_dict(self) -> dict:
        d = asdict(self)
        d["margin"] = self.margin
        return d


@dataclass
class EntropyReport:
    max_residual: float
    n_positive: int
    tol: float
    per_c: dict
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# Norms
# --------------------------------------------------------------------------


def active_l1_norm(rho: np.ndarray, grid: Grid, topology: LaneTopology) -> float:
    """Vehicle count on active lanes: ``dx * sum`` over active (lane, side) cells."""
    parts = [
        np.abs(rho[[j - 1 for j in sorted(topology.active(side))], grid.side_slice(side)]).ravel()
        for side in Side
    ]
    return grid.dx * math.fsum(np.concatenate(parts).tolist())


def fictive_mismatches(rho: np.ndarray, grid: Grid, topology: LaneTopology) -> int:
    """Number of fictive cells that are not exactly 0 (left) / 1 (right)."""
    bad = 0
    for side in Side:
        rows = [j - 1 for j in topology.fictive(side)]
        if rows:
            bad += int(np.count_nonzero(rho[rows, grid.side_slice(side)] != side.fictive_value))
    return bad


def active_l1_difference(a: np.ndarray, b: np.ndarray, grid: Grid, topology: LaneTopology) -> float:
    return active_l1_norm(a - b, grid, topology)


def total_variation(row, start: int = 0, stop: int | None = None) -> float:
    """``sum |row[k+1] - row[k]|`` for ``start <= k < stop`` (default: whole row)."""
    row = np.asarray(row, dtype=float)
    stop = len(row) - 1 if stop is None else stop
    if not 0 <= start <= stop <= len(row) - 1:
        raise ValueError(f"invalid index range [{start}, {stop}) for a row of {len(row)} cells")
    return math.fsum(np.abs(np.diff(row[start : stop + 1])).tolist())


def l1_distance_arrays(a: np.ndarray, b: np.ndarray, dx: float) -> float:
    return dx * math.fsum(np.abs(a - b).ravel().tolist())


# --------------------------------------------------------------------------
# Entropy
# --------------------------------------------------------------------------


def entropy_residuals(rho_n, rho_half, rho_next, c: float, grid: Grid,
                      scenario: "Scenario", dt: float | None = None) -> np.ndarray:
    """Per-cell left-hand side of the discrete Kruzhkov inequality, all lanes, shape ``(M, K)``.

    The scheme guarantees every entry is ``<= 0`` in exact arithmetic.
    """
    rho_n, rho_half, rho_next = (np.asarray(a, dtype=float) for a in (rho_n, rho_half, rho_next))
    if not (rho_n.shape == rho_half.shape == rho_next.shape):
        raise ValueError("time levels have mismatched shapes")
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"entropy constant {c} outside [0, 1]")
    dt = grid.dt if dt is None else dt
    lam = dt / grid.dx
    prof = scenario.profiles
    ent_flux = (interface_fluxes(np.maximum(rho_n, c), grid, prof)
                - interface_fluxes(np.minimum(rho_n, c), grid, prof))
    fc = interface_fluxes(np.full_like(rho_n, c), grid, prof)
    S = source_rates(rho_half, grid, scenario.topology, prof)
    return (
        np.abs(rho_next - c)
        - np.abs(rho_n - c)
        + lam * (ent_flux[:, 1:] - ent_flux[:, :-1])
        - lam * np.abs(fc[:, 1:] - fc[:, :-1])
        - dt * np.sign(rho_next - c) * (S[:-1] - S[1:])
    )


def entropy_residual(rho_n, rho_half, rho_next, c: float, j: int, grid: Grid,
                     scenario: "Scenario", dt: float | None = None) -> np.ndarray:
    """Entropy residual of lane ``j`` (see :func:`entropy_residuals`)."""
    return entropy_residuals(rho_n, rho_half, rho_next, c, grid, scenario, dt)[j - 1]


def entropy_check(result: "RunResult", c_values: Sequence[float] = DEFAULT_C_GRID,
                  tol: float = ENTROPY_TOL) -> EntropyReport:
    """Largest entropy residual over all cells, lanes, steps and constants ``c``.

    Uses the residuals logged during the run when it was made with
    ``entropy_c``; otherwise recomputes every step from ``result.history``.
    """
    per_c = {float(c): -math.inf for c in c_values}
    n_pos = 0
    logged = bool(result.records) and all(
        rec.entropy is not None and set(per_c) <= set(rec.entropy) for rec in result.records
    )
    if logged:
        for rec in result.records:
            for c in per_c:
                worst, count = rec.entropy[c]
                per_c[c] = max(per_c[c], worst)
                n_pos += count
    elif result.history is not None:
        from .solver import advance

        sc, grid = result.scenario, result.grid
        for n, rec in enumerate(result.records):
            data = advance(result.history[n], grid, sc, rec.dt)
            for c in per_c:
                res = entropy_residuals(data.rho_n, data.rho_half, data.rho_next, c, grid, sc, rec.dt)
                per_c[c] = max(per_c[c], float(res.max()))
                n_pos += int(np.count_nonzero(res > tol))
    else:
        raise ModelError("entropy_check needs a run made with entropy_c or keep_history=True")
    worst = max(per_c.values()) if result.records else 0.0
    return EntropyReport(worst, n_pos, tol, per_c, worst <= tol)


# --------------------------------------------------------------------------
# Bound checks
# --------------------------------------------------------------------------


def bounds_check(result: "RunResult", tol: float = DOMAIN_TOL) -> BoundReport:
    """Smallest/largest raw (pre-clamp) density over all steps and snapshots."""
    lows = [rec.rho_min for rec in result.records] + [float(s.min()) for _, s in result.snapshots]
    highs = [rec.rho_max for rec in result.records] + [float(s.max()) for _, s in result.snapshots]
    lo, hi = min(lows), max(highs)
    excess = max(-lo, hi - 1.0) + 0.0  # avoid reporting -0.0
    return BoundReport("bounds", excess, tol, excess <= tol, {"min": lo, "max": hi})


def conservation_check(result: "RunResult", rel_tol: float = 1e-10) -> BoundReport:
    """Active-lane vehicle balance: ``norm(t_n) = norm(0) + inflow through the window ends``.

    On an unbounded road with integrable data the inflow term is zero; on the
    truncated window the ends carry the flux of the far-field states.
    """
    norm0 = result.initial_norm
    acc, worst, worst_raw = [], 0.0, 0.0
    for rec in result.records:
        acc.append(rec.inflow)
        drift = rec.l1_active - norm0
        worst = max(worst, abs(drift - math.fsum(acc)))
        worst_raw = max(worst_raw, abs(drift))
    tol = rel_tol * (1.0 + norm0)
    return BoundReport(
        "conservation", worst, tol, worst <= tol,
        {"initial_norm": norm0, "net_boundary_inflow": math.fsum(acc),
         "max_unbalanced_drift": worst_raw, "boundary_ok": result.boundary_ok},
    )


def fictive_check(result: "RunResult") -> BoundReport:
    """Fictive entries stay exactly 0 (left) / 1 (right) at every step; counts mismatching cells."""
    grid, topo = result.grid, result.scenario.topology
    bad = sum(rec.fictive_bad for rec in result.records)
    bad += sum(fictive_mismatches(s, grid, topo) for _, s in result.snapshots)
    return BoundReport("fictive", float(bad), 0.0, bad == 0,
                       {"steps_checked": len(result.records)})


def _initial_tv(result: "RunResult") -> float:
    return math.fsum(total_variation(row) for row in result.initial)


def time_continuity_bound(result: "RunResult", dt: float | None = None) -> float:
    """Right-hand side of the per-step L1 increment estimate."""
    sc = result.scenario
    dt = result.grid.dt if dt is None else dt
    M = sc.topology.M
    return 2.0 * math.exp(4.0 * result.v_c1 * sc.T) * dt * (
        result.v_c1 * _initial_tv(result) + M * result.v_max + 2.0 * result.v_max * result.initial_norm
    )


def time_continuity_check(result: "RunResult") -> BoundReport:
    """Per-step increment ``dx * sum |rho^{n+1} - rho^n|`` over active lanes vs. its bound."""
    worst, worst_ratio = 0.0, 0.0
    for rec in result.records:
        b = time_continuity_bound(result, rec.dt)
        worst = max(worst, rec.increment)
        worst_ratio = max(worst_ratio, rec.increment / b)
    bound = time_continuity_bound(result)
    return BoundReport("time-continuity", worst, bound, worst_ratio <= 1.0,
                       {"max_ratio": worst_ratio, "steps": len(result.records)})


def bv_constant(result: "RunResult") -> float:
    sc = result.scenario
    return 2.0 * sc.T * math.exp(4.0 * result.v_c1 * sc.T) * (
        result.v_c1 * _initial_tv(result)
        + sc.topology.M * result.v_max
        + 2.0 * result.v_max * result.initial_norm
    )


def bv_bound(result: "RunResult", s: float) -> float:
    sc = result.scenario
    return math.exp(4.0 * result.v_c1 * sc.T) * (
        _initial_tv(result) + 8.0 * sc.topology.M * result.v_max * sc.T + 2.0 * bv_constant(result) / s
    )


def bv_indices(grid: Grid, a: float, b: float, s: float) -> np.ndarray:
    """Array indices of cells with centre in ``[a, b]``, after checking the interval hypotheses."""
    if a >= b:
        raise ModelError(f"empty interval [{a}, {b}]")
    if a <= 0.0 <= b:
        raise ModelError(f"interval [{a}, {b}] contains the junction x=0")
    if not (2.0 * s < min(abs(a), abs(b)) and s > grid.dx):
        raise ModelError(f"need dx < s and 2s < min(|a|, |b|); got s={s}, dx={grid.dx}")
    x = grid.centers
    idx = np.nonzero((x >= a) & (x <= b))[0]
    if len(idx) == 0 or idx[-1] + 1 >= grid.K:
        raise ModelError(f"interval [{a}, {b}] is not inside the computational window")
    return idx


def bv_check(result: "RunResult", a: float, b: float, s: float) -> BoundReport:
    """Local total variation on ``[a, b]`` at every step ``n >= 1`` vs. its bound."""
    idx = bv_indices(result.grid, a, b, s)
    states = result.history if result.history is not None else [st for _, st in result.snapshots]
    worst = 0.0
    for rho in states[1:]:
        tv = math.fsum(
            math.fsum(np.abs(rho[r, idx + 1] - rho[r, idx]).tolist()) for r in range(rho.shape[0])
        )
        worst = max(worst, tv)
    bound = bv_bound(result, s)
    return BoundReport(f"bv[{a},{b}]", worst, bound, worst <= bound,
                       {"s": s, "C": bv_constant(result), "states_checked": len(states) - 1})


# --------------------------------------------------------------------------
# Paired runs
# --------------------------------------------------------------------------


@dataclass
class L1Comparison:
    initial: float
    final: float
    slack: float
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _check_paired(a: "RunResult", b: "RunResult"):
    sa, sb = a.scenario, b.scenario
    if (sa.topology != sb.topology or sa.profiles != sb.profiles or a.grid != b.grid
            or sa.T != sb.T):
        raise ModelError("paired runs must share topology, speed laws, grid and horizon")


def l1_distance(a: "RunResult", b: "RunResult", t: float | None = None,
                slack_cells: float = 10.0) -> L1Comparison:
    """L1 distance at the snapshot nearest ``t`` (default: final) vs. the initial distance."""
    _check_paired(a, b)
    dx = a.grid.dx
    d0 = l1_distance_arrays(a.initial, b.initial, dx)
    ra = a.final if t is None else a.snapshot_at(t)
    rb = b.final if t is None else b.snapshot_at(t)
    d1 = l1_distance_arrays(ra, rb, dx)
    slack = slack_cells * dx
    return L1Comparison(d0, d1, slack, d1 <= d0 + slack)


def order_violation(a: "RunResult", b: "RunResult") -> float:
    """Largest ``a - b`` over all stored steps; ``<= 0`` when the order ``a <= b`` persists."""
    _check_paired(a, b)
    if a.history is None or b.history is None:
        raise ModelError("order_violation needs runs with keep_history=True")
    return max(float(np.max(x - y)) for x, y in zip(a.history, b.history))


# --------------------------------------------------------------------------
# Self-convergence
# --------------------------------------------------------------------------


def restrict(rho: np.ndarray, factor: int) -> np.ndarray:
    """Average groups of ``factor`` consecutive cells."""
    M, K = rho.shape
    if K % factor:
        raise ValueError(f"{K} cells cannot be grouped by {factor}")
    return rho.reshape(M, K // factor, factor).mean(axis=2)


@dataclass
class ConvergenceTable:
    dx: list
    distances: list
    orders: list

    def as_dict(self) -> dict:
        return asdict(self)


def convergence_study(scenario: "Scenario", levels: int = 4) -> ConvergenceTable:
    """Run ``levels`` meshes (``dx`` halved each time) at fixed ``lambda`` and compare neighbours.

    Distance ``i`` is ``dx_i * sum |rho_i - R(rho_{i+1})|`` at ``T``, where ``R``
    averages pairs of fine cells onto the coarse mesh.
    """
    from .solver import run

    if levels < 2:
        raise ValueError("a convergence study needs at least 2 levels")
    dxs = [scenario.dx / 2**i for i in range(levels)]
    finals = [run(scenario.with_(dx=h, snapshot_times=())).final for h in dxs]
    dist = [l1_distance_arrays(finals[i], restrict(finals[i + 1], 2), dxs[i]) for i in range(levels - 1)]
    orders = [math.log2(dist[i] / dist[i + 1]) if dist[i + 1] > 0 else math.inf
              for i in range(len(dist) - 1)]
    return ConvergenceTable(dxs, dist, orders)
